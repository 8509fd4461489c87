#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sdfsim/scene/asset.hpp"
#include "sdfsim/scene/rigid_transform.hpp"

namespace sdfsim::scene {

// Per-object pose history over the three most recent timesteps. World-frame
// node positions are always derived from the transforms, never stored.
class SceneState {
public:
    SceneState() = default;

    // history[i] = {pose at t-2, pose at t-1, pose at t}.
    SceneState(std::vector<std::array<RigidTransform, 3>> history, double dt, std::int64_t t = 2)
        : history_(std::move(history)), dt_(dt), t_(t) {
        for (auto& h : history_)
            for (auto& tf : h)
                require(tf.is_unit(), "state", "non-unit quaternion in scene state");
    }

    int num_objects() const { return int(history_.size()); }
    double dt() const { return dt_; }
    std::int64_t step_index() const { return t_; }

    // lag 0 = t, 1 = t-1, 2 = t-2.
    const RigidTransform& pose(int object, int lag) const { return history_[object][2 - lag]; }

    void advance(const std::vector<RigidTransform>& next) {
        require(int(next.size()) == num_objects(), "state", "advance with wrong object count");
        for (int i = 0; i < num_objects(); ++i) {
            history_[i][0] = history_[i][1];
            history_[i][1] = history_[i][2];
            history_[i][2] = next[i];
            history_[i][2].renormalize();
        }
        ++t_;
    }

private:
    std::vector<std::array<RigidTransform, 3>> history_;
    double dt_ = 0.01;
    std::int64_t t_ = 2;
};

}  // namespace sdfsim::scene
