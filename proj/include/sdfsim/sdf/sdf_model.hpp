#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sdfsim/core/types.hpp"
#include "sdfsim/nn/mlp.hpp"
#include "sdfsim/nn/serialize.hpp"

namespace sdfsim::sdf {

// One distance/gradient/closest-point query result.
//
// `gradient` is the vector actually used in the closest-point projection:
// the raw network gradient renormalized to unit length when its norm exceeds
// 0.5, left as-is (and `degenerate` set) otherwise. The projection identity
// y_star == y - d * gradient therefore holds exactly by construction.
// `raw_grad_norm` preserves the unnormalized norm for field diagnostics.
struct SdfQuery {
    double d = 0.0;
    Vec3 gradient = Vec3::Zero();
    double raw_grad_norm = 0.0;
    Vec3 y_star = Vec3::Zero();
    bool degenerate = false;
};

inline SdfQuery make_query(const Vec3& y, double d, const Vec3& raw_grad) {
    SdfQuery q;
    q.d = d;
    q.raw_grad_norm = raw_grad.norm();
    if (q.raw_grad_norm > 0.5) {
        q.gradient = raw_grad / q.raw_grad_norm;
    } else {
        q.gradient = raw_grad;
        q.degenerate = true;
    }
    q.y_star = y - q.d * q.gradient;
    return q;
}

// A per-shape learned signed-distance function: an MLP from a 3D point in the
// shape's reference frame (max |coordinate| 0.5) to a scalar distance.
// Immutable after training; concurrent queries are safe.
struct SdfModel {
    nn::Mlp mlp;
    std::string shape_id;
    double mesh_scale = 1.0;  // factor that rescaled the source mesh into the reference frame
    bool unsigned_only = false;
    std::int64_t iterations = 0;
    double final_loss_signed = 0.0;
    double final_loss_unsigned = 0.0;

    // Distance and input-gradient for a batch of reference-frame points:
    // one forward plus one backward pass.
    void evaluate(const std::vector<Vec3>& pts, std::vector<double>& d, std::vector<Vec3>& grad) const {
        MatF x(pts.size(), 3);
        for (std::size_t i = 0; i < pts.size(); ++i)
            x.row(i) = pts[i].cast<float>().transpose();
        nn::Mlp::Tape tape;
        MatF y = mlp.forward(x, tape);
        auto grads = mlp.make_grads();
        MatF dx;
        mlp.backward(tape, MatF::Ones(pts.size(), 1), grads, &dx);
        d.resize(pts.size());
        grad.resize(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            d[i] = double(y(i, 0));
            grad[i] = dx.row(i).cast<double>().transpose();
        }
    }

    SdfQuery query(const Vec3& y) const {
        std::vector<double> d;
        std::vector<Vec3> g;
        evaluate({y}, d, g);
        return make_query(y, d[0], g[0]);
    }

    std::vector<SdfQuery> query_batch(const std::vector<Vec3>& pts) const {
        std::vector<double> d;
        std::vector<Vec3> g;
        evaluate(pts, d, g);
        std::vector<SdfQuery> out(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) out[i] = make_query(pts[i], d[i], g[i]);
        return out;
    }

    void save(const std::filesystem::path& path) const {
        nn::TensorBundle b;
        b.meta["kind"] = "sdf_model";
        b.meta["shape_id"] = shape_id;
        b.meta["mesh_scale"] = mesh_scale;
        b.meta["unsigned_only"] = unsigned_only;
        b.meta["iterations"] = iterations;
        b.meta["final_loss_signed"] = final_loss_signed;
        b.meta["final_loss_unsigned"] = final_loss_unsigned;
        b.meta["mlp"] = nn::mlp_config_json(mlp.config());
        nn::bundle_add_mlp(b, "mlp", mlp);
        b.save(path);
    }

    static SdfModel load(const std::filesystem::path& path) {
        nn::TensorBundle b = nn::TensorBundle::load(path);
        require(b.meta.value("kind", "") == "sdf_model", "io",
                "'" + path.string() + "' is not an SDF asset");
        SdfModel m;
        m.mlp = nn::bundle_read_mlp(b, "mlp", nn::mlp_config_from_json(b.meta.at("mlp")));
        m.shape_id = b.meta.value("shape_id", "");
        m.mesh_scale = b.meta.value("mesh_scale", 1.0);
        m.unsigned_only = b.meta.value("unsigned_only", false);
        m.iterations = b.meta.value("iterations", std::int64_t(0));
        m.final_loss_signed = b.meta.value("final_loss_signed", 0.0);
        m.final_loss_unsigned = b.meta.value("final_loss_unsigned", 0.0);
        return m;
    }
};

}  // namespace sdfsim::sdf
