#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "sdfsim/core/parallel.hpp"
#include "sdfsim/io/trajectory.hpp"
#include "sdfsim/scene/asset_library.hpp"
#include "sdfsim/sim/gnn.hpp"

namespace sdfsim::sim {

// Finite-difference acceleration target: a = n(t+1) - 2 n(t) + n(t-1).
inline Vec3 target_acceleration(const Vec3& n_tm1, const Vec3& n_t, const Vec3& n_tp1) {
    return n_tp1 - 2.0 * n_t + n_tm1;
}

// Position update inverting the target: n(t+1) = a + 2 n(t) - n(t-1).
inline Vec3 euler_update(const Vec3& accel, const Vec3& n_t, const Vec3& n_tm1) {
    return accel + 2.0 * n_t - n_tm1;
}

struct SimTrainConfig {
    std::int64_t steps = 200000;
    int batch = 2;
    double noise_sigma = 0.003;
    double collision_threshold = 0.1;  // D
    nn::LrSchedule lr{1e-3, 1e-4, 200000};
    std::uint64_t seed = 0;
    unsigned threads = 0;  // 0 = hardware concurrency
    GnnConfig gnn;
    std::function<void(std::int64_t, double)> progress;  // (step, windowed loss)
    std::int64_t report_interval = 1000;
};

// One training sample: a (trajectory, t) window predicting step t+1.
struct TrainSample {
    int trajectory = 0;
    int t = 2;
};

// Single-step supervised training of the graph-network simulator on oracle
// trajectories. Inputs get Gaussian position noise at time t; targets are the
// finite-difference accelerations measured from the perturbed state, so the
// Euler update from noisy inputs lands on the clean next position. The loss
// is the MSE of normalized accelerations over dynamic (non-static) nodes.
class SimTrainer {
public:
    SimTrainer(GnnModel& model, const std::vector<io::Trajectory>& trajectories,
               scene::AssetLibrary& library, const SimTrainConfig& cfg)
        : model_(model), trajs_(trajectories), cfg_(cfg), opt_(cfg.lr), rng_(cfg.seed) {
        require(!trajs_.empty(), "config", "no training trajectories");
        for (const auto& t : trajs_) {
            require(t.steps() >= 4, "config", "trajectories must have at least 4 steps");
            assets_.push_back(library.assets_for(t));
        }
        model_.visit_mlps([&](const std::string&, nn::Mlp& m) {
            m.visit_tensors_mut(
                [&](const std::string&, float* p, std::size_t n) { opt_.register_buffer(p, n); });
        });
        grads_ = model_.make_grads();
        for (int b = 0; b < cfg_.batch; ++b) sample_grads_.push_back(model_.make_grads());
    }

    std::int64_t step_count() const { return opt_.step_count(); }
    std::int64_t rejected_steps() const { return rejected_; }

    // Builds the noisy graph and matching targets for one sample.
    struct Prepared {
        scene::SimGraph graph;
        MatF target;        // [Ns, 3] raw accelerations
        std::vector<char> dynamic;  // per surface node
        int n_dynamic = 0;
    };

    Prepared prepare(const TrainSample& s, Rng rng) const {
        const io::Trajectory& traj = trajs_[s.trajectory];
        const auto& assets = assets_[s.trajectory];
        scene::SceneState state = scene::state_from_trajectory(traj, s.t);
        scene::FrameSet frames = scene::frames_from_state(state, assets);

        Prepared out;
        const int I = traj.num_objects();
        int total_nodes = 0;
        for (const auto& a : assets) total_nodes += int(a.reference_nodes.size());
        out.target.resize(total_nodes, 3);
        out.target.setZero();
        out.dynamic.assign(total_nodes, 0);

        int idx = 0;
        for (int i = 0; i < I; ++i) {
            const auto& ref = assets[i].reference_nodes;
            if (!assets[i].is_static) {
                // Single per-node perturbation at t, part of both the features
                // and the finite-difference target.
                for (std::size_t k = 0; k < ref.size(); ++k)
                    frames.n_t[i][k] += rng.normal3(cfg_.noise_sigma);
                frames.o_t[i] += rng.normal3(cfg_.noise_sigma);
                for (std::size_t k = 0; k < ref.size(); ++k) {
                    Vec3 n_tp1 = traj.poses[s.t + 1][i].apply(ref[k]);
                    Vec3 a = target_acceleration(frames.n_tm1[i][k], frames.n_t[i][k], n_tp1);
                    out.target.row(idx + int(k)) = a.cast<float>().transpose();
                    out.dynamic[idx + int(k)] = 1;
                    ++out.n_dynamic;
                }
            }
            idx += int(ref.size());
        }
        out.graph = scene::build_graph(frames, assets, {cfg_.collision_threshold, {}});
        return out;
    }

    // One optimizer step over a batch of sampled windows. Returns the batch
    // loss; a non-finite loss rejects the step and leaves parameters alone.
    double train_step() {
        const std::int64_t step = opt_.step_count() + rejected_;
        std::vector<TrainSample> samples(cfg_.batch);
        for (int b = 0; b < cfg_.batch; ++b) {
            int traj = int(rng_.uniform_index(trajs_.size()));
            int t = 2 + int(rng_.uniform_index(trajs_[traj].steps() - 3));
            samples[b] = {traj, t};
        }

        std::vector<Prepared> prepared(cfg_.batch);
        unsigned workers = cfg_.threads ? cfg_.threads : default_thread_count();
        parallel_for_index(cfg_.batch, workers, [&](std::size_t b) {
            prepared[b] = prepare(samples[b], rng_.child(step * 7919 + b));
        });

        // Normalizer updates in fixed batch order, before any apply.
        for (auto& p : prepared) {
            model_.update_input_normalizers(p.graph);
            if (p.n_dynamic > 0) {
                MatF dyn(p.n_dynamic, 3);
                int r = 0;
                for (int k = 0; k < p.target.rows(); ++k)
                    if (p.dynamic[k]) dyn.row(r++) = p.target.row(k);
                model_.norm_accel().update(dyn);
            }
        }

        std::vector<double> losses(cfg_.batch, 0.0);
        parallel_for_index(cfg_.batch, workers, [&](std::size_t b) {
            auto& p = prepared[b];
            GnnModel::Tape tape;
            MatF pred = model_.forward(p.graph, tape);
            MatF target_norm = model_.norm_accel().apply(p.target);
            double denom = double(p.n_dynamic) * 3.0;
            MatF dpred = MatF::Zero(pred.rows(), 3);
            double loss = 0.0;
            for (int k = 0; k < pred.rows(); ++k) {
                if (!p.dynamic[k]) continue;  // static nodes carry zero gradient exactly
                for (int c = 0; c < 3; ++c) {
                    float e = pred(k, c) - target_norm(k, c);
                    loss += double(e) * e;
                    dpred(k, c) = 2.0f * e / float(denom);
                }
            }
            losses[b] = loss / denom;
            sample_grads_[b].set_zero();
            model_.backward(tape, dpred, sample_grads_[b]);
        });

        double batch_loss = 0.0;
        for (double l : losses) batch_loss += l;
        batch_loss /= cfg_.batch;
        if (!std::isfinite(batch_loss)) {
            ++rejected_;
            return batch_loss;
        }

        grads_.set_zero();
        for (int b = 0; b < cfg_.batch; ++b) grads_.add(sample_grads_[b], 1.0f / float(cfg_.batch));
        std::vector<const float*> ptrs;
        GnnModel::visit_grads(grads_, [&](nn::Mlp::Grads& g) {
            nn::Mlp::visit_grads(g, [&](float* p, std::size_t) { ptrs.push_back(p); });
        });
        if (!opt_.step(ptrs)) ++rejected_;
        return batch_loss;
    }

    void run(std::int64_t steps) {
        double window = 0.0;
        std::int64_t n = 0;
        for (std::int64_t s = 0; s < steps; ++s) {
            double loss = train_step();
            if (std::isfinite(loss)) {
                window += loss;
                ++n;
            }
            if (cfg_.progress && (s + 1) % cfg_.report_interval == 0) {
                cfg_.progress(s + 1, n ? window / double(n) : std::nan(""));
                window = 0.0;
                n = 0;
            }
        }
    }

private:
    GnnModel& model_;
    const std::vector<io::Trajectory>& trajs_;
    std::vector<std::vector<scene::ObjectAsset>> assets_;
    SimTrainConfig cfg_;
    nn::AdamOptimizer opt_;
    GnnModel::Grads grads_;
    std::vector<GnnModel::Grads> sample_grads_;
    Rng rng_;
    std::int64_t rejected_ = 0;
};

}  // namespace sdfsim::sim
