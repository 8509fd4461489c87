#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdfsim/scene/asset.hpp"
#include "sdfsim/scene/rigid_transform.hpp"
#include "sdfsim/scene/shape_spec.hpp"

namespace sdfsim::io {

// Time series of per-object poses plus the shape/parameter metadata needed to
// rebuild assets. On disk: newline-delimited JSON, one header line followed by
// one line per step.
struct Trajectory {
    struct Object {
        scene::ShapeSpec shape;
        scene::PhysicalParams params;
        bool is_static = false;
    };

    double dt = 0.01;
    std::vector<Object> objects;
    std::vector<std::vector<scene::RigidTransform>> poses;  // [step][object]

    int steps() const { return int(poses.size()); }
    int num_objects() const { return int(objects.size()); }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path);
        require(out.good(), "io", "cannot open '" + path.string() + "' for writing");
        nlohmann::json header;
        header["schema"] = "sdfsim.trajectory/1";
        header["dt"] = dt;
        header["objects"] = nlohmann::json::array();
        for (const auto& o : objects)
            header["objects"].push_back({{"shape", o.shape.to_json()},
                                         {"mass", o.params.mass},
                                         {"friction", o.params.friction},
                                         {"restitution", o.params.restitution},
                                         {"static", o.is_static}});
        out << header.dump() << '\n';
        for (std::size_t t = 0; t < poses.size(); ++t) {
            nlohmann::json line;
            line["t"] = t;
            auto& arr = line["poses"] = nlohmann::json::array();
            for (const auto& tf : poses[t])
                arr.push_back({tf.p.x(), tf.p.y(), tf.p.z(), tf.q.w(), tf.q.x(), tf.q.y(), tf.q.z()});
            out << line.dump() << '\n';
        }
        require(out.good(), "io", "short write to '" + path.string() + "'");
    }

    static Trajectory load(const std::filesystem::path& path) {
        std::ifstream in(path);
        require(in.good(), "io", "cannot open trajectory '" + path.string() + "'");
        std::string line;
        require(bool(std::getline(in, line)), "io", "empty trajectory file '" + path.string() + "'");
        nlohmann::json header = nlohmann::json::parse(line);
        require(header.value("schema", "") == "sdfsim.trajectory/1", "io",
                "'" + path.string() + "' has an unknown trajectory schema");
        Trajectory traj;
        traj.dt = header.at("dt");
        for (const auto& jo : header.at("objects")) {
            Object o;
            o.shape = scene::ShapeSpec::from_json(jo.at("shape"));
            o.params.mass = jo.at("mass");
            o.params.friction = jo.at("friction");
            o.params.restitution = jo.at("restitution");
            o.is_static = jo.at("static");
            traj.objects.push_back(o);
        }
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line);
            std::vector<scene::RigidTransform> row;
            for (const auto& p : j.at("poses")) {
                scene::RigidTransform tf;
                tf.p = Vec3(p[0], p[1], p[2]);
                tf.q = Quat(p[3], p[4], p[5], p[6]).normalized();
                row.push_back(tf);
            }
            require(row.size() == traj.objects.size(), "io",
                    "pose row width mismatch in '" + path.string() + "'");
            traj.poses.push_back(std::move(row));
        }
        return traj;
    }
};

// Initial scene description: objects with a starting pose and velocity.
// The three-frame history a rollout needs is synthesized by constant-velocity
// extrapolation backwards in time.
struct SceneDescription {
    struct Object {
        scene::ShapeSpec shape;
        scene::PhysicalParams params;
        bool is_static = false;
        scene::RigidTransform pose;
        Vec3 velocity = Vec3::Zero();
        Vec3 angular_velocity = Vec3::Zero();
    };
    double dt = 0.01;
    std::vector<Object> objects;

    static SceneDescription load(const std::filesystem::path& path) {
        std::ifstream in(path);
        require(in.good(), "io", "cannot open scene '" + path.string() + "'");
        nlohmann::json j = nlohmann::json::parse(in);
        require(j.value("schema", "") == "sdfsim.scene/1", "io",
                "'" + path.string() + "' has an unknown scene schema");
        SceneDescription s;
        s.dt = j.value("dt", 0.01);
        for (const auto& jo : j.at("objects")) {
            Object o;
            o.shape = scene::ShapeSpec::from_json(jo.at("shape"));
            o.params.mass = jo.value("mass", 1.0);
            o.params.friction = jo.value("friction", 0.3);
            o.params.restitution = jo.value("restitution", 0.5);
            o.is_static = jo.value("static", false);
            auto p = jo.at("position");
            o.pose.p = Vec3(p[0], p[1], p[2]);
            if (jo.contains("rotation")) {
                auto q = jo.at("rotation");
                o.pose.q = Quat(q[0], q[1], q[2], q[3]).normalized();
            }
            if (jo.contains("velocity")) {
                auto v = jo.at("velocity");
                o.velocity = Vec3(v[0], v[1], v[2]);
            }
            if (jo.contains("angular_velocity")) {
                auto w = jo.at("angular_velocity");
                o.angular_velocity = Vec3(w[0], w[1], w[2]);
            }
            s.objects.push_back(o);
        }
        return s;
    }

    void save(const std::filesystem::path& path) const {
        nlohmann::json j;
        j["schema"] = "sdfsim.scene/1";
        j["dt"] = dt;
        j["objects"] = nlohmann::json::array();
        for (const auto& o : objects) {
            nlohmann::json jo;
            jo["shape"] = o.shape.to_json();
            jo["mass"] = o.params.mass;
            jo["friction"] = o.params.friction;
            jo["restitution"] = o.params.restitution;
            jo["static"] = o.is_static;
            jo["position"] = {o.pose.p.x(), o.pose.p.y(), o.pose.p.z()};
            jo["rotation"] = {o.pose.q.w(), o.pose.q.x(), o.pose.q.y(), o.pose.q.z()};
            jo["velocity"] = {o.velocity.x(), o.velocity.y(), o.velocity.z()};
            jo["angular_velocity"] = {o.angular_velocity.x(), o.angular_velocity.y(),
                                      o.angular_velocity.z()};
            j["objects"].push_back(jo);
        }
        std::ofstream out(path);
        require(out.good(), "io", "cannot open '" + path.string() + "' for writing");
        out << j.dump(2) << '\n';
    }
};

}  // namespace sdfsim::io
