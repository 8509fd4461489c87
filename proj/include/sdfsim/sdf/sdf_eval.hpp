#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <json.hpp>

#include "sdfsim/core/rng.hpp"
#include "sdfsim/geometry/analytic.hpp"
#include "sdfsim/geometry/bvh.hpp"
#include "sdfsim/sdf/field.hpp"

namespace sdfsim::sdf {

// Ground truth for one evaluation point.
struct ReferenceQuery {
    double d = 0.0;
    Vec3 grad = Vec3::Zero();
    Vec3 closest = Vec3::Zero();
};

using ReferenceFn = std::function<ReferenceQuery(const Vec3&)>;

inline ReferenceFn reference_from(const geo::AnalyticShape& shape) {
    return [shape](const Vec3& y) {
        auto r = shape.sdf(y);
        return ReferenceQuery{r.d, r.grad, y - r.d * r.grad};
    };
}

inline ReferenceFn reference_from(const geo::DistanceOracle& oracle) {
    return [&oracle](const Vec3& y) {
        auto sd = oracle.signed_distance(y);
        Vec3 delta = y - sd.closest;
        double len = delta.norm();
        Vec3 grad = len > 1e-12 ? Vec3(delta / len * (sd.d >= 0.0 ? 1.0 : -1.0)) : Vec3(0, 0, 1);
        return ReferenceQuery{sd.d, grad, sd.closest};
    };
}

struct SdfEvalBand {
    double lo = 0.0, hi = 0.0;
    long count = 0;
    double mse_distance = 0.0;   // (f - d_true)^2
    double grad_cos_error = 0.0; // 1 - cos(raw gradient, true gradient)
    double projection_error = 0.0;  // ||y_star - true closest point||
};

struct SdfEvalReport {
    std::vector<SdfEvalBand> bands;
    long n_points = 0;
    double near_mse = 0.0;        // |d_true| < 0.2
    double far_mse = 0.0;         // |d_true| in [0.35, 0.5]
    double frac_unit_grad = 0.0;  // raw ||grad|| in [0.9, 1.1] where |d_true| < 0.2
    double frac_proj_resid = 0.0; // |f(y_star)| < 0.01 where |f(y)| < 0.3
    double mean_proj_error_near = 0.0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["n_points"] = n_points;
        j["near_mse"] = near_mse;
        j["far_mse"] = far_mse;
        j["frac_unit_grad"] = frac_unit_grad;
        j["frac_proj_resid"] = frac_proj_resid;
        j["mean_proj_error_near"] = mean_proj_error_near;
        j["bands"] = nlohmann::json::array();
        for (const auto& b : bands)
            j["bands"].push_back({{"lo", b.lo},
                                  {"hi", b.hi},
                                  {"count", b.count},
                                  {"mse_distance", b.mse_distance},
                                  {"grad_cos_error", b.grad_cos_error},
                                  {"projection_error", b.projection_error}});
        return j;
    }
};

struct SdfEvalConfig {
    long n_points = 20000;
    std::uint64_t seed = 17;
    double band_lo = -0.5, band_hi = 0.5, band_width = 0.05;
    Vec3 domain_lo = Vec3(-0.7, -0.7, -0.7);
    Vec3 domain_hi = Vec3(0.7, 0.7, 0.7);
    double proj_band = 0.3;       // |f(y)| band for the projection-residual rate
    double proj_threshold = 0.01; // residual bound |f(y_star)|
};

// Samples the domain uniformly and reports subject-vs-reference errors binned
// by the true signed distance, plus the aggregate gradient-norm and
// projection-residual rates.
inline SdfEvalReport evaluate_sdf(const DistanceField& subject, const ReferenceFn& reference,
                                  const SdfEvalConfig& cfg = {}) {
    Rng rng(cfg.seed);
    std::vector<Vec3> pts(cfg.n_points);
    for (auto& p : pts) p = rng.uniform_in_box(cfg.domain_lo, cfg.domain_hi);

    auto queries = subject.query_batch(pts);

    int n_bands = int(std::ceil((cfg.band_hi - cfg.band_lo) / cfg.band_width));
    SdfEvalReport rep;
    rep.bands.resize(n_bands);
    for (int b = 0; b < n_bands; ++b) {
        rep.bands[b].lo = cfg.band_lo + b * cfg.band_width;
        rep.bands[b].hi = rep.bands[b].lo + cfg.band_width;
    }

    long near_n = 0, far_n = 0, unit_n = 0, unit_ok = 0;
    double near_acc = 0.0, far_acc = 0.0, proj_near_acc = 0.0;
    std::vector<Vec3> proj_pts;
    for (long i = 0; i < cfg.n_points; ++i) {
        ReferenceQuery ref = reference(pts[i]);
        const SdfQuery& q = queries[i];
        double err2 = (q.d - ref.d) * (q.d - ref.d);
        double abs_d = std::abs(ref.d);
        if (abs_d < 0.2) {
            near_acc += err2;
            proj_near_acc += (q.y_star - ref.closest).norm();
            ++near_n;
            ++unit_n;
            if (q.raw_grad_norm >= 0.9 && q.raw_grad_norm <= 1.1) ++unit_ok;
        }
        if (abs_d >= 0.35 && abs_d <= 0.5) {
            far_acc += err2;
            ++far_n;
        }
        int b = int(std::floor((ref.d - cfg.band_lo) / cfg.band_width));
        if (b >= 0 && b < n_bands) {
            auto& band = rep.bands[b];
            band.count++;
            band.mse_distance += err2;
            Vec3 raw = q.degenerate ? q.gradient : Vec3(q.gradient * q.raw_grad_norm);
            double denom = raw.norm() * ref.grad.norm();
            double cosv = denom > 1e-12 ? raw.dot(ref.grad) / denom : 0.0;
            band.grad_cos_error += 1.0 - std::min(1.0, std::max(-1.0, cosv));
            band.projection_error += (q.y_star - ref.closest).norm();
        }
        if (std::abs(q.d) < cfg.proj_band) proj_pts.push_back(q.y_star);
    }
    for (auto& band : rep.bands) {
        if (band.count == 0) continue;
        band.mse_distance /= band.count;
        band.grad_cos_error /= band.count;
        band.projection_error /= band.count;
    }
    rep.n_points = cfg.n_points;
    rep.near_mse = near_n ? near_acc / near_n : 0.0;
    rep.far_mse = far_n ? far_acc / far_n : 0.0;
    rep.frac_unit_grad = unit_n ? double(unit_ok) / unit_n : 0.0;
    rep.mean_proj_error_near = near_n ? proj_near_acc / near_n : 0.0;

    if (!proj_pts.empty()) {
        auto resid = subject.query_batch(proj_pts);
        long ok = 0;
        for (const auto& r : resid)
            if (std::abs(r.d) < cfg.proj_threshold) ++ok;
        rep.frac_proj_resid = double(ok) / double(proj_pts.size());
    }
    return rep;
}

}  // namespace sdfsim::sdf
