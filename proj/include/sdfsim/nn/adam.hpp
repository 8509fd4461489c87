#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sdfsim/core/types.hpp"

namespace sdfsim::nn {

// Exponential interpolation from lr_start at step 0 to lr_end at `horizon`,
// constant afterwards. horizon <= 0 means a constant lr_start.
struct LrSchedule {
    double lr_start = 1e-3;
    double lr_end = 1e-4;
    std::int64_t horizon = 0;

    static LrSchedule constant(double lr) { return {lr, lr, 0}; }

    double at(std::int64_t step) const {
        if (horizon <= 0 || lr_start == lr_end) return lr_start;
        double f = std::min(1.0, double(step) / double(horizon));
        return lr_start * std::pow(lr_end / lr_start, f);
    }
};

// Adam over a flat list of (parameter, gradient) buffer pairs. Buffers are
// registered once; moment buffers mirror their sizes.
class AdamOptimizer {
public:
    explicit AdamOptimizer(LrSchedule schedule, double beta1 = 0.9, double beta2 = 0.999,
                           double eps = 1e-8)
        : schedule_(schedule), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void register_buffer(float* params, std::size_t count) {
        params_.push_back(params);
        counts_.push_back(count);
        m_.emplace_back(count, 0.0f);
        v_.emplace_back(count, 0.0f);
    }

    std::int64_t step_count() const { return step_; }
    double current_lr() const { return schedule_.at(step_); }

    // Applies one update from gradient buffers laid out like the registered
    // parameters. Returns false (parameters untouched) on non-finite input.
    bool step(const std::vector<const float*>& grads) {
        require(grads.size() == params_.size(), "shape", "adam: gradient list size mismatch");
        for (std::size_t i = 0; i < grads.size(); ++i)
            for (std::size_t j = 0; j < counts_[i]; ++j)
                if (!std::isfinite(grads[i][j])) return false;

        const double lr = schedule_.at(step_);
        ++step_;
        const float inv_bc1 = float(1.0 / (1.0 - std::pow(beta1_, double(step_))));
        const float inv_bc2 = float(1.0 / (1.0 - std::pow(beta2_, double(step_))));
        const float b1 = float(beta1_), b2 = float(beta2_);
        const float alpha = float(lr), eps = float(eps_);
        for (std::size_t i = 0; i < params_.size(); ++i) {
            float* p = params_[i];
            float* m = m_[i].data();
            float* v = v_[i].data();
            const float* g = grads[i];
            for (std::size_t j = 0; j < counts_[i]; ++j) {
                m[j] = b1 * m[j] + (1.0f - b1) * g[j];
                v[j] = b2 * v[j] + (1.0f - b2) * g[j] * g[j];
                const float mhat = m[j] * inv_bc1;
                const float vhat = v[j] * inv_bc2;
                p[j] -= alpha * mhat / (std::sqrt(vhat) + eps);
            }
        }
        return true;
    }

private:
    LrSchedule schedule_;
    double beta1_, beta2_, eps_;
    std::vector<float*> params_;
    std::vector<std::size_t> counts_;
    std::vector<std::vector<float>> m_, v_;
    std::int64_t step_ = 0;
};

}  // namespace sdfsim::nn
