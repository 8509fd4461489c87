#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "sdfsim/core/rng.hpp"
#include "sdfsim/geometry/bvh.hpp"
#include "sdfsim/geometry/mesh.hpp"
#include "sdfsim/nn/adam.hpp"
#include "sdfsim/sdf/sdf_model.hpp"

namespace sdfsim::sdf {

struct SdfTrainConfig {
    int width = 64;
    int depth = 8;  // total linear layers
    std::int64_t iterations = 50000;
    double learning_rate = 1e-5;  // constant
    int batch = 512;
    double density = 10000.0;     // surface samples per square meter
    double noise_sigma = 0.1;
    int noisy_per_surface = 2;    // Gaussian-offset queries drawn per surface sample
    int resample_interval = 100;  // redraw the noisy query points this often
    bool unsigned_only = false;   // fit |d| instead of the signed distance
    std::uint64_t seed = 0;
    std::string shape_id;
    // Called every `report_interval` iterations with (iteration, mean loss).
    std::function<void(std::int64_t, double)> progress;
    std::int64_t report_interval = 5000;
};

namespace detail {

struct QueryPool {
    std::vector<Vec3> points;
    std::vector<float> target;     // signed distance (or |d| for UDF training)
    std::vector<char> reliable;    // sign reliability gate
    std::size_t noisy_begin = 0;   // [noisy_begin, end) get refreshed periodically
    std::vector<Vec3> surface;     // base points the noisy copies are drawn from
};

inline void label_noisy(QueryPool& pool, const geo::DistanceOracle& oracle, double sigma,
                        bool unsigned_only, Rng& rng) {
    for (std::size_t j = pool.noisy_begin; j < pool.points.size(); ++j) {
        Vec3 p = pool.surface[(j - pool.noisy_begin) % pool.surface.size()] + rng.normal3(sigma);
        auto sd = oracle.signed_distance(p);
        pool.points[j] = p;
        pool.target[j] = float(unsigned_only ? std::abs(sd.d) : sd.d);
        pool.reliable[j] = sd.sign_reliable ? 1 : 0;
    }
}

}  // namespace detail

// Fits an MLP to BVH ground-truth distances of a mesh rescaled to
// max |coordinate| = 0.5. Query points are area-uniform surface samples plus
// Gaussian offsets of them; the offset set is redrawn every
// `resample_interval` iterations. The loss combines an L2 term on signed
// distances, gated to points whose sign estimate is reliable, with an L2 term
// on absolute distances over all points.
inline SdfModel train_sdf(const geo::TriangleMesh& mesh, const SdfTrainConfig& cfg) {
    require(std::abs(mesh.max_abs_coord() - 0.5) < 1e-6, "config",
            "SDF training expects a mesh rescaled to max |coordinate| = 0.5");
    require(cfg.depth >= 2 && cfg.width > 0 && cfg.batch > 0, "config", "bad SDF training config");

    geo::DistanceOracle oracle(mesh);
    Rng rng(cfg.seed);

    // Surface points carry exact zero targets; only the offsets need the BVH.
    auto samples = geo::sample_surface_points(mesh, cfg.density, 0.0, rng.child(1).next_u64());
    detail::QueryPool pool;
    for (const auto& s : samples)
        if (!s.noisy) pool.surface.push_back(s.p);
    require(!pool.surface.empty(), "geometry", "mesh has no surface area to sample");
    std::size_t n_surface = pool.surface.size();
    std::size_t n_total = n_surface * std::size_t(1 + std::max(1, cfg.noisy_per_surface));
    pool.points.resize(n_total);
    pool.target.resize(n_total);
    pool.reliable.resize(n_total);
    for (std::size_t i = 0; i < n_surface; ++i) {
        pool.points[i] = pool.surface[i];
        pool.target[i] = 0.0f;
        pool.reliable[i] = 1;
    }
    pool.noisy_begin = n_surface;
    Rng noise_rng = rng.child(2);
    detail::label_noisy(pool, oracle, cfg.noise_sigma, cfg.unsigned_only, noise_rng);

    SdfModel model;
    Rng init_rng = rng.child(3);
    model.mlp = nn::Mlp({3, 1, cfg.width, cfg.depth - 1, nn::Activation::Elu, false}, init_rng);
    model.shape_id = cfg.shape_id;
    model.unsigned_only = cfg.unsigned_only;

    nn::AdamOptimizer opt(nn::LrSchedule::constant(cfg.learning_rate));
    model.mlp.visit_tensors_mut(
        [&](const std::string&, float* p, std::size_t n) { opt.register_buffer(p, n); });

    auto grads = model.mlp.make_grads();
    std::vector<const float*> grad_ptrs;
    auto collect_grad_ptrs = [&] {
        grad_ptrs.clear();
        for (auto& l : grads.layers) {
            grad_ptrs.push_back(l.w.data());
            grad_ptrs.push_back(l.b.data());
        }
    };

    nn::Mlp checkpoint = model.mlp;  // last known-good parameters
    Rng batch_rng = rng.child(4);
    MatF x(cfg.batch, 3), target(cfg.batch, 1);
    std::vector<char> rel(cfg.batch);
    double loss_signed = 0.0, loss_unsigned = 0.0, window_loss = 0.0;
    std::int64_t window_n = 0;

    for (std::int64_t it = 0; it < cfg.iterations; ++it) {
        if (it > 0 && cfg.resample_interval > 0 && it % cfg.resample_interval == 0)
            detail::label_noisy(pool, oracle, cfg.noise_sigma, cfg.unsigned_only, noise_rng);

        for (int b = 0; b < cfg.batch; ++b) {
            std::size_t j = batch_rng.uniform_index(pool.points.size());
            x.row(b) = pool.points[j].cast<float>().transpose();
            target(b, 0) = pool.target[j];
            rel[b] = pool.reliable[j];
        }

        nn::Mlp::Tape tape;
        MatF f = model.mlp.forward(x, tape);
        int n_gated = 0;
        for (int b = 0; b < cfg.batch; ++b)
            if (rel[b]) ++n_gated;

        MatF df = MatF::Zero(cfg.batch, 1);
        loss_signed = 0.0;
        loss_unsigned = 0.0;
        if (cfg.unsigned_only) {
            // Targets already hold |d|; plain L2 on the raw output.
            for (int b = 0; b < cfg.batch; ++b) {
                float e = f(b, 0) - target(b, 0);
                loss_unsigned += double(e) * e;
                df(b, 0) = 2.0f * e / float(cfg.batch);
            }
            loss_unsigned /= cfg.batch;
        } else {
            for (int b = 0; b < cfg.batch; ++b) {
                float fv = f(b, 0), dv = target(b, 0);
                if (rel[b]) {
                    float e = fv - dv;
                    loss_signed += double(e) * e;
                    df(b, 0) += 2.0f * e / float(n_gated);
                }
                float eu = std::abs(fv) - std::abs(dv);
                loss_unsigned += double(eu) * eu;
                float sgn = fv > 0.0f ? 1.0f : (fv < 0.0f ? -1.0f : 0.0f);
                df(b, 0) += 2.0f * eu * sgn / float(cfg.batch);
            }
            if (n_gated > 0) loss_signed /= n_gated;
            loss_unsigned /= cfg.batch;
        }
        double loss = loss_signed + loss_unsigned;

        if (!std::isfinite(loss)) {
            model.mlp = checkpoint;
            model.iterations = it;
            throw Error("train", "SDF training diverged at iteration " + std::to_string(it) +
                                     "; last good checkpoint kept");
        }

        grads.set_zero();
        model.mlp.backward(tape, df, grads);
        collect_grad_ptrs();
        opt.step(grad_ptrs);

        window_loss += loss;
        ++window_n;
        if (it % 1000 == 999) checkpoint = model.mlp;
        if (cfg.progress && (it + 1) % cfg.report_interval == 0) {
            cfg.progress(it + 1, window_loss / double(window_n));
            window_loss = 0.0;
            window_n = 0;
        }
    }

    model.iterations = cfg.iterations;
    model.final_loss_signed = loss_signed;
    model.final_loss_unsigned = loss_unsigned;
    return model;
}

}  // namespace sdfsim::sdf
