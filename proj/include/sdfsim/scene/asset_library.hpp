#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>

#include "sdfsim/io/trajectory.hpp"
#include "sdfsim/sdf/sdf_sample.hpp"
#include "sdfsim/scene/asset.hpp"
#include "sdfsim/scene/shape_spec.hpp"

namespace sdfsim::scene {

struct AssetBuildOptions {
    // Learned fields need trained SDF files named <shape_id>.sdf in sdf_dir;
    // otherwise dynamic objects carry their analytic fields.
    bool use_learned = false;
    std::filesystem::path sdf_dir;

    // Surface-node source: collision-mesh vertices at this resolution...
    int sphere_subdiv = 1;  // icosphere level (42 nodes at 1)
    int box_segments = 2;   // per-face grid (26 nodes at 2)
    // ...or, when set, nodes resampled from the learned SDF on a grid_n^3 grid.
    std::optional<int> sample_grid_n;
};

// Builds assets for trajectory objects, caching one field and node set per
// distinct shape id.
class AssetLibrary {
public:
    explicit AssetLibrary(AssetBuildOptions opts = {}) : opts_(std::move(opts)) {}

    const AssetBuildOptions& options() const { return opts_; }

    std::vector<ObjectAsset> assets_for(const io::Trajectory& traj) {
        std::vector<ObjectAsset> out;
        out.reserve(traj.objects.size());
        for (int i = 0; i < traj.num_objects(); ++i) {
            const auto& obj = traj.objects[i];
            ObjectAsset a = shape_asset(obj.shape);
            a.id = i;
            a.params = obj.params;
            a.is_static = obj.is_static;
            out.push_back(std::move(a));
        }
        return out;
    }

    // Field + reference nodes for one shape (parameters left at defaults).
    ObjectAsset shape_asset(const ShapeSpec& shape) {
        auto it = cache_.find(shape.id());
        if (it == cache_.end()) it = cache_.emplace(shape.id(), build(shape)).first;
        return it->second;
    }

private:
    ObjectAsset build(const ShapeSpec& shape) const {
        ObjectAsset a;
        a.shape_id = shape.id();
        if (shape.kind == ShapeSpec::Kind::Floor) {
            a.field = sdf::DistanceField(shape.analytic());
            a.is_static = true;
            int n = shape.floor_grid;
            double e = shape.floor_extent;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    a.reference_nodes.emplace_back(-e + 2.0 * e * i / (n - 1),
                                                   -e + 2.0 * e * j / (n - 1), 0.0);
            return a;
        }

        std::shared_ptr<const sdf::SdfModel> model;
        if (opts_.use_learned) {
            auto path = opts_.sdf_dir / (shape.id() + ".sdf");
            require(std::filesystem::exists(path), "io",
                    "missing trained SDF '" + path.string() + "' (run train-sdf first)");
            model = std::make_shared<sdf::SdfModel>(sdf::SdfModel::load(path));
            a.field = sdf::DistanceField(model);
        } else {
            a.field = sdf::DistanceField(shape.analytic());
        }

        if (opts_.sample_grid_n) {
            require(model != nullptr, "config", "node resampling needs a learned SDF field");
            auto ref_nodes = sdf::sample_nodes_from_sdf(*model, *opts_.sample_grid_n);
            for (const auto& p : ref_nodes) a.reference_nodes.push_back(p / model->mesh_scale);
        } else {
            int detail = shape.kind == ShapeSpec::Kind::Sphere ? opts_.sphere_subdiv
                                                               : opts_.box_segments;
            a.reference_nodes = shape.build_mesh(detail).vertices;
            if (opts_.use_learned) snap_nodes_to_field(a.reference_nodes, a.field);
        }
        return a;
    }

    AssetBuildOptions opts_;
    std::map<std::string, ObjectAsset> cache_;
};

// Three-frame history from a trajectory prefix (poses at t-2, t-1, t).
inline SceneState state_from_trajectory(const io::Trajectory& traj, int t) {
    require(t >= 2 && t < traj.steps(), "state", "trajectory too short for a warmed-up state");
    std::vector<std::array<RigidTransform, 3>> hist(traj.num_objects());
    for (int i = 0; i < traj.num_objects(); ++i)
        hist[i] = {traj.poses[t - 2][i], traj.poses[t - 1][i], traj.poses[t][i]};
    return SceneState(std::move(hist), traj.dt, t);
}

// Constant-velocity backward extrapolation for scenes that specify only an
// initial pose and velocity.
inline SceneState state_from_scene(const io::SceneDescription& scene) {
    std::vector<std::array<RigidTransform, 3>> hist(scene.objects.size());
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        const auto& o = scene.objects[i];
        RigidTransform tf = o.pose;
        std::array<RigidTransform, 3> h;
        h[2] = tf;
        Vec3 w = o.angular_velocity;
        double angle = w.norm() * scene.dt;
        Quat dq = angle > 1e-12 ? Quat(Eigen::AngleAxisd(-angle, w.normalized())) : Quat::Identity();
        for (int lag = 1; lag <= 2; ++lag) {
            RigidTransform prev;
            prev.p = h[3 - lag].p - o.velocity * scene.dt;
            prev.q = (dq * h[3 - lag].q).normalized();
            h[2 - lag] = prev;
        }
        hist[i] = h;
    }
    return SceneState(std::move(hist), scene.dt, 2);
}

inline std::vector<ObjectAsset> assets_from_scene(const io::SceneDescription& scene,
                                                  AssetLibrary& lib) {
    io::Trajectory tmp;
    tmp.dt = scene.dt;
    for (const auto& o : scene.objects) tmp.objects.push_back({o.shape, o.params, o.is_static});
    return lib.assets_for(tmp);
}

}  // namespace sdfsim::scene
