#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "sdfsim/sdf/field.hpp"

namespace sdfsim::scene {

// Constant per-object physical parameters fed to the simulator as features.
struct PhysicalParams {
    double mass = 1.0;
    double friction = 0.3;
    double restitution = 0.5;
};

// Immutable shape bundle: a distance field, the reference-frame surface
// nodes that ride along with the body, and its physical parameters.
struct ObjectAsset {
    int id = 0;
    std::string shape_id;
    sdf::DistanceField field;
    std::vector<Vec3> reference_nodes;
    PhysicalParams params;
    bool is_static = false;

    void validate() const {
        require(!reference_nodes.empty(), "config", "asset '" + shape_id + "' has no surface nodes");
        if (!is_static)
            require(reference_nodes.size() >= 4, "config",
                    "dynamic asset '" + shape_id + "' needs at least 4 surface nodes");
    }
};

// Pulls nodes onto the field's zero level set where they sit farther than
// `tol` from it; mesh vertices against a learned field can be off by the
// field's own fitting error.
inline std::size_t snap_nodes_to_field(std::vector<Vec3>& nodes, const sdf::DistanceField& field,
                                       double tol = 0.01, int max_rounds = 3) {
    std::size_t moved = 0;
    for (int round = 0; round < max_rounds; ++round) {
        auto q = field.query_batch(nodes);
        bool any = false;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (std::abs(q[i].d) >= tol && !q[i].degenerate) {
                nodes[i] = q[i].y_star;
                any = true;
                if (round == 0) ++moved;
            }
        }
        if (!any) break;
    }
    return moved;
}

inline void save_asset(const ObjectAsset& asset, const std::filesystem::path& path) {
    nn::TensorBundle b;
    b.meta["kind"] = "object_asset";
    b.meta["shape_id"] = asset.shape_id;
    b.meta["is_static"] = asset.is_static;
    b.meta["mass"] = asset.params.mass;
    b.meta["friction"] = asset.params.friction;
    b.meta["restitution"] = asset.params.restitution;
    MatD nodes(asset.reference_nodes.size(), 3);
    for (std::size_t i = 0; i < asset.reference_nodes.size(); ++i)
        nodes.row(i) = asset.reference_nodes[i].transpose();
    b.add_f64("nodes", nodes);
    if (const auto* learned = asset.field.learned()) {
        b.meta["field"] = "learned";
        b.meta["mesh_scale"] = learned->mesh_scale;
        b.meta["unsigned_only"] = learned->unsigned_only;
        b.meta["mlp"] = nn::mlp_config_json(learned->mlp.config());
        nn::bundle_add_mlp(b, "sdf", learned->mlp);
    } else {
        const auto* shape = asset.field.analytic();
        b.meta["field"] = "analytic";
        b.meta["shape"] = {{"kind", shape->name()},
                           {"radius", shape->radius},
                           {"half_extents", {shape->half_extents.x(), shape->half_extents.y(),
                                             shape->half_extents.z()}},
                           {"major_radius", shape->major_radius},
                           {"minor_radius", shape->minor_radius},
                           {"plane_normal", {shape->plane_normal.x(), shape->plane_normal.y(),
                                             shape->plane_normal.z()}},
                           {"plane_offset", shape->plane_offset}};
    }
    b.save(path);
}

inline ObjectAsset load_asset(const std::filesystem::path& path) {
    nn::TensorBundle b = nn::TensorBundle::load(path);
    require(b.meta.value("kind", "") == "object_asset", "io",
            "'" + path.string() + "' is not an asset bundle");
    ObjectAsset a;
    a.shape_id = b.meta.value("shape_id", "");
    a.is_static = b.meta.value("is_static", false);
    a.params.mass = b.meta.value("mass", 1.0);
    a.params.friction = b.meta.value("friction", 0.3);
    a.params.restitution = b.meta.value("restitution", 0.5);
    const MatD& nodes = b.f64("nodes");
    a.reference_nodes.resize(nodes.rows());
    for (Eigen::Index i = 0; i < nodes.rows(); ++i) a.reference_nodes[i] = nodes.row(i).transpose();
    if (b.meta.value("field", "") == "learned") {
        auto model = std::make_shared<sdf::SdfModel>();
        model->mlp = nn::bundle_read_mlp(b, "sdf", nn::mlp_config_from_json(b.meta.at("mlp")));
        model->mesh_scale = b.meta.value("mesh_scale", 1.0);
        model->unsigned_only = b.meta.value("unsigned_only", false);
        model->shape_id = a.shape_id;
        a.field = sdf::DistanceField(std::move(model));
    } else {
        const auto& s = b.meta.at("shape");
        std::string kind = s.at("kind");
        geo::AnalyticShape shape;
        if (kind == "sphere") {
            shape = geo::AnalyticShape::sphere(s.at("radius"));
        } else if (kind == "box") {
            auto he = s.at("half_extents");
            shape = geo::AnalyticShape::box(Vec3(he[0], he[1], he[2]));
        } else if (kind == "torus") {
            shape = geo::AnalyticShape::torus(s.at("major_radius"), s.at("minor_radius"));
        } else if (kind == "half_space") {
            auto n = s.at("plane_normal");
            shape = geo::AnalyticShape::half_space(Vec3(n[0], n[1], n[2]), s.at("plane_offset"));
        } else {
            throw Error("io", "unknown analytic shape '" + kind + "'");
        }
        a.field = sdf::DistanceField(shape);
    }
    a.validate();
    return a;
}

}  // namespace sdfsim::scene
