#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sdfsim/core/parallel.hpp"
#include "sdfsim/io/trajectory.hpp"
#include "sdfsim/oracle/oracle.hpp"

namespace sdfsim::phys {

// Shapes are drawn from a small discrete library so each distinct geometry
// gets one trained SDF; physical parameters vary continuously per object.
inline std::vector<scene::ShapeSpec> default_shape_library() {
    return {scene::ShapeSpec::sphere(0.20), scene::ShapeSpec::sphere(0.25),
            scene::ShapeSpec::sphere(0.30), scene::ShapeSpec::box(Vec3(0.20, 0.20, 0.20)),
            scene::ShapeSpec::box(Vec3(0.28, 0.20, 0.14)),
            scene::ShapeSpec::box(Vec3(0.30, 0.25, 0.18))};
}

struct DatasetConfig {
    int train_trajectories = 500;
    int val_trajectories = 50;
    int test_trajectories = 50;
    int steps = 100;
    double dt = 0.01;
    int min_objects = 2, max_objects = 4;
    double floor_extent = 1.6;  // half-width of the floor node patch
    int floor_grid = 7;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::vector<scene::ShapeSpec> shapes = default_shape_library();

    // Initial condition distribution: objects start on a ring above the
    // floor and are thrown toward the scene center.
    double spawn_radius_min = 0.7, spawn_radius_max = 1.2;
    double spawn_height_min = 0.5, spawn_height_max = 1.3;
    double speed_min = 1.0, speed_max = 2.5;
    double up_speed_max = 1.0;
    double spin_max = 3.0;
    double restitution_min = 0.3, restitution_max = 0.8;
    double friction_min = 0.2, friction_max = 0.6;
    double density_min = 500.0, density_max = 1500.0;
};

namespace detail {

inline double body_volume(const scene::ShapeSpec& s) {
    if (s.kind == scene::ShapeSpec::Kind::Sphere)
        return 4.0 / 3.0 * std::numbers::pi * std::pow(s.radius, 3);
    return 8.0 * s.half_extents.prod();
}

}  // namespace detail

// One sampled scene, simulated with the oracle. Deterministic per rng stream.
inline io::Trajectory generate_trajectory(const DatasetConfig& cfg, Rng rng) {
    const int n_obj = cfg.min_objects + int(rng.uniform_index(cfg.max_objects - cfg.min_objects + 1));

    std::vector<OracleBody> bodies;
    for (int i = 0; i < n_obj; ++i) {
        const auto& shape = cfg.shapes[rng.uniform_index(cfg.shapes.size())];
        double e = rng.uniform(cfg.restitution_min, cfg.restitution_max);
        double mu = rng.uniform(cfg.friction_min, cfg.friction_max);
        double mass = detail::body_volume(shape) * rng.uniform(cfg.density_min, cfg.density_max);
        OracleBody b = shape.kind == scene::ShapeSpec::Kind::Sphere
                           ? OracleBody::sphere(shape.radius, mass, e, mu)
                           : OracleBody::box(shape.half_extents, mass, e, mu);

        // Rejection-sample a non-overlapping spawn pose.
        for (int attempt = 0;; ++attempt) {
            require(attempt < 200, "oracle", "could not place objects without overlap");
            double ang = rng.uniform(0.0, 2.0 * std::numbers::pi);
            double rad = rng.uniform(cfg.spawn_radius_min, cfg.spawn_radius_max);
            b.p = Vec3(rad * std::cos(ang), rad * std::sin(ang),
                       rng.uniform(cfg.spawn_height_min, cfg.spawn_height_max));
            b.q = rng.random_rotation();
            bool clear = b.p.z() - b.bounding_radius() > 1e-3;
            for (const auto& other : bodies)
                if ((other.p - b.p).norm() < other.bounding_radius() + b.bounding_radius() + 1e-3)
                    clear = false;
            if (clear) break;
        }
        Vec3 target(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), b.p.z());
        Vec3 dir = (target - b.p).normalized();
        b.v = dir * rng.uniform(cfg.speed_min, cfg.speed_max) +
              Vec3(0, 0, rng.uniform(0.0, cfg.up_speed_max));
        b.w = Vec3(rng.uniform(-cfg.spin_max, cfg.spin_max), rng.uniform(-cfg.spin_max, cfg.spin_max),
                   rng.uniform(-cfg.spin_max, cfg.spin_max));
        bodies.push_back(b);
    }

    io::Trajectory traj;
    traj.dt = cfg.dt;
    for (const auto& b : bodies)
        traj.objects.push_back({b.shape, {b.mass, b.friction, b.restitution}, false});
    traj.objects.push_back({scene::ShapeSpec::floor(cfg.floor_extent, cfg.floor_grid),
                            {0.0, 1.0, 1.0},
                            true});

    RigidOracle oracle;
    traj.poses.reserve(cfg.steps);
    for (int t = 0; t < cfg.steps; ++t) {
        std::vector<scene::RigidTransform> row;
        row.reserve(bodies.size() + 1);
        for (const auto& b : bodies) row.push_back({b.p, b.q});
        row.push_back(scene::RigidTransform::identity());  // floor
        traj.poses.push_back(std::move(row));
        if (t + 1 < cfg.steps) oracle.step(bodies, cfg.dt);
    }
    return traj;
}

struct DatasetPaths {
    std::filesystem::path root;
    std::filesystem::path manifest() const { return root / "manifest.json"; }
    std::filesystem::path trajectory(const std::string& split, int index) const {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%s_%05d.traj", split.c_str(), index);
        return root / buf;
    }
};

// Writes train/val/test trajectory files plus a manifest describing the
// config, the shape library and any skipped trajectories. Deterministic per
// seed: each trajectory derives its own rng stream from (seed, split, index).
inline nlohmann::json generate_dataset(const DatasetConfig& cfg, const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    fs::create_directories(root);
    DatasetPaths paths{root};

    Rng base(cfg.seed);
    nlohmann::json skipped = nlohmann::json::array();
    struct Split {
        const char* name;
        int count;
        std::uint64_t salt;
    };
    std::vector<Split> splits = {{"train", cfg.train_trajectories, 1},
                                 {"val", cfg.val_trajectories, 2},
                                 {"test", cfg.test_trajectories, 3}};
    for (const auto& split : splits) {
        std::vector<int> failed(split.count, 0);
        parallel_for_index(split.count, cfg.threads ? cfg.threads : default_thread_count(),
                           [&](std::size_t i) {
                               Rng stream = base.child(split.salt * 1000003ull + i);
                               try {
                                   auto traj = generate_trajectory(cfg, stream);
                                   traj.save(paths.trajectory(split.name, int(i)));
                               } catch (const Error&) {
                                   failed[i] = 1;
                               }
                           });
        for (int i = 0; i < split.count; ++i)
            if (failed[i]) skipped.push_back(std::string(split.name) + "_" + std::to_string(i));
    }

    nlohmann::json manifest;
    manifest["schema"] = "sdfsim.dataset/1";
    manifest["seed"] = cfg.seed;
    manifest["dt"] = cfg.dt;
    manifest["steps"] = cfg.steps;
    manifest["splits"] = {{"train", cfg.train_trajectories},
                          {"val", cfg.val_trajectories},
                          {"test", cfg.test_trajectories}};
    manifest["objects"] = {{"min", cfg.min_objects}, {"max", cfg.max_objects}};
    manifest["floor"] = {{"extent", cfg.floor_extent}, {"grid", cfg.floor_grid}};
    manifest["shapes"] = nlohmann::json::array();
    for (const auto& s : cfg.shapes) manifest["shapes"].push_back(s.to_json());
    manifest["skipped"] = skipped;
    manifest["oracle"] = {{"gravity", -9.8},
                          {"solver_iterations", OracleConfig{}.solver_iterations},
                          {"resting_tolerance", OracleConfig{}.resting_tolerance},
                          {"defaults_note", "restitution/friction ranges are oracle choices, "
                                            "not asserted as equivalent to any external engine"}};
    std::ofstream mf(paths.manifest());
    mf << manifest.dump(2) << '\n';
    return manifest;
}

inline std::vector<io::Trajectory> load_split(const std::filesystem::path& root,
                                              const std::string& split, int max_count = -1) {
    DatasetPaths paths{root};
    std::vector<io::Trajectory> out;
    for (int i = 0;; ++i) {
        if (max_count >= 0 && int(out.size()) >= max_count) break;
        auto p = paths.trajectory(split, i);
        if (!std::filesystem::exists(p)) break;
        out.push_back(io::Trajectory::load(p));
    }
    require(!out.empty(), "io", "no '" + split + "' trajectories under " + root.string());
    return out;
}

}  // namespace sdfsim::phys
