#pragma once

#include <map>
#include <vector>

#include "sdfsim/sdf/sdf_model.hpp"

namespace sdfsim::sdf {

// Resamples surface nodes from a trained SDF: project a grid_n^3 grid over
// [-0.7, 0.7]^3 to the surface, keep projections with |f(y*)| < 0.01, then
// thin to at most one point per voxel of size 0.025. All in the reference
// frame. The grid is fixed, so the result is deterministic.
inline std::vector<Vec3> sample_nodes_from_sdf(const SdfModel& model, int grid_n,
                                               double filter_threshold = 0.01,
                                               double voxel_size = 0.025) {
    require(grid_n >= 2, "config", "node sampling grid must be at least 2^3");
    std::vector<Vec3> grid;
    grid.reserve(std::size_t(grid_n) * grid_n * grid_n);
    for (int i = 0; i < grid_n; ++i)
        for (int j = 0; j < grid_n; ++j)
            for (int k = 0; k < grid_n; ++k)
                grid.emplace_back(-0.7 + 1.4 * i / double(grid_n - 1),
                                  -0.7 + 1.4 * j / double(grid_n - 1),
                                  -0.7 + 1.4 * k / double(grid_n - 1));

    auto queries = model.query_batch(grid);
    std::vector<Vec3> projected;
    projected.reserve(grid.size());
    for (const auto& q : queries)
        if (!q.degenerate) projected.push_back(q.y_star);

    // Filter on the re-evaluated distance at the projected points.
    std::vector<double> d;
    std::vector<Vec3> g;
    model.evaluate(projected, d, g);

    std::map<std::array<long long, 3>, Vec3> voxels;  // first point per voxel wins
    std::vector<Vec3> out;
    for (std::size_t i = 0; i < projected.size(); ++i) {
        if (std::abs(d[i]) >= filter_threshold) continue;
        std::array<long long, 3> key = {llround(std::floor(projected[i].x() / voxel_size)),
                                        llround(std::floor(projected[i].y() / voxel_size)),
                                        llround(std::floor(projected[i].z() / voxel_size))};
        if (voxels.emplace(key, projected[i]).second) out.push_back(projected[i]);
    }
    require(!out.empty(), "sdf", "node sampling: every projected point was filtered out");
    return out;
}

}  // namespace sdfsim::sdf
