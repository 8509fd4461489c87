#pragma once

#include <optional>
#include <vector>

#include "sdfsim/scene/state.hpp"

namespace sdfsim::scene {

// World-frame positions for the latest three steps, the raw material for
// graph construction. Derived from a SceneState, then optionally perturbed
// (training noise) before features are computed.
struct FrameSet {
    std::vector<std::vector<Vec3>> n_t, n_tm1, n_tm2;  // [object][node]
    std::vector<Vec3> o_t, o_tm1, o_tm2;               // object-node positions
    std::vector<RigidTransform> tf_t;                  // pose at t (reference -> world)
};

inline FrameSet frames_from_state(const SceneState& state, const std::vector<ObjectAsset>& assets) {
    require(state.num_objects() == int(assets.size()), "state", "state/assets object count mismatch");
    const int I = state.num_objects();
    FrameSet f;
    f.n_t.resize(I);
    f.n_tm1.resize(I);
    f.n_tm2.resize(I);
    f.o_t.resize(I);
    f.o_tm1.resize(I);
    f.o_tm2.resize(I);
    f.tf_t.resize(I);
    for (int i = 0; i < I; ++i) {
        const auto& ref = assets[i].reference_nodes;
        for (int lag = 0; lag < 3; ++lag) {
            const RigidTransform& tf = state.pose(i, lag);
            auto& nodes = (lag == 0 ? f.n_t : lag == 1 ? f.n_tm1 : f.n_tm2)[i];
            nodes.resize(ref.size());
            for (std::size_t k = 0; k < ref.size(); ++k) nodes[k] = tf.apply(ref[k]);
            (lag == 0 ? f.o_t : lag == 1 ? f.o_tm1 : f.o_tm2)[i] = tf.p;
        }
        f.tf_t[i] = state.pose(i, 0);
    }
    return f;
}

// Eq.-2-style closest point: distance from the query's position in the
// target's reference frame, the gradient rotated back into world frame.
struct ClosestPoint {
    double d = 0.0;
    Vec3 c = Vec3::Zero();
    bool degenerate = false;
};

inline ClosestPoint world_closest_point(const Vec3& query, const sdf::DistanceField& field,
                                        const RigidTransform& tf) {
    sdf::SdfQuery q = field.query(tf.apply_inverse(query));
    return {q.d, query - q.d * tf.rotate(q.gradient), q.degenerate};
}

// The simulator's input graph. Edges are stored once per undirected relation;
// message passing expands them into two directed messages.
struct SimGraph {
    int num_objects = 0;
    std::vector<int> surface_owner;   // flattened surface node -> object index
    std::vector<int> object_offset;   // first flattened node index per object

    MatF surface_feat;  // [Ns, 11]: v1, v2, |v1|, |v2|, mass, friction, restitution
    MatF object_feat;   // [I, 12]:  same plus the static flag

    std::vector<std::pair<int, int>> intra;  // (surface node, owner object)
    MatF intra_feat;                         // [Ni, 4]: o - n, |o - n|

    struct CollEdge {
        int surface;  // flattened surface node on object i
        int object;   // opposing object j
        double distance;
    };
    std::vector<CollEdge> coll;
    MatF coll_feat;  // [Nc, 8]: c - n, c - o_j, |c - n|, |c - o_j|

    std::size_t node_pair_count = 0;  // diagnostic; only filled on request

    int num_surface_nodes() const { return int(surface_owner.size()); }

    std::size_t collision_edge_bound() const {
        return std::size_t(num_objects - 1) * surface_owner.size();
    }
};

struct GraphBuildOptions {
    double collision_threshold = 0.1;  // D, in world units
    // When set, also count hypothetical cross-object node pairs within this
    // radius (the connectivity a node-pair baseline would use).
    std::optional<double> node_pair_radius;
};

namespace detail {

inline void count_node_pairs(const FrameSet& f, const std::vector<ObjectAsset>& assets, double radius,
                             SimGraph& g) {
    const int I = int(assets.size());
    const double r2 = radius * radius;
    std::size_t count = 0;
    for (int i = 0; i < I; ++i) {
        for (int j = i + 1; j < I; ++j) {
            if (assets[i].is_static && assets[j].is_static) continue;
            for (const Vec3& a : f.n_t[i]) {
                for (const Vec3& b : f.n_t[j]) {
                    if ((a - b).squaredNorm() <= r2) ++count;
                }
            }
        }
    }
    g.node_pair_count = count;
}

}  // namespace detail

// Assembles node features, intra-object edges and SDF-based collision edges.
// Ordering is fixed by object then node index, so the result is deterministic.
inline SimGraph build_graph(const FrameSet& f, const std::vector<ObjectAsset>& assets,
                            const GraphBuildOptions& opts = {}) {
    const int I = int(assets.size());
    const double D = opts.collision_threshold;
    SimGraph g;
    g.num_objects = I;

    int total_nodes = 0;
    g.object_offset.resize(I);
    for (int i = 0; i < I; ++i) {
        g.object_offset[i] = total_nodes;
        total_nodes += int(assets[i].reference_nodes.size());
    }
    g.surface_owner.resize(total_nodes);

    g.surface_feat.resize(total_nodes, 11);
    g.object_feat.resize(I, 12);
    g.intra.reserve(total_nodes);
    g.intra_feat.resize(total_nodes, 4);

    for (int i = 0; i < I; ++i) {
        const auto& phi = assets[i].params;
        for (std::size_t k = 0; k < f.n_t[i].size(); ++k) {
            int idx = g.object_offset[i] + int(k);
            g.surface_owner[idx] = i;
            Vec3 v1 = f.n_t[i][k] - f.n_tm1[i][k];
            Vec3 v2 = f.n_tm1[i][k] - f.n_tm2[i][k];
            g.surface_feat.row(idx) << float(v1.x()), float(v1.y()), float(v1.z()), float(v2.x()),
                float(v2.y()), float(v2.z()), float(v1.norm()), float(v2.norm()), float(phi.mass),
                float(phi.friction), float(phi.restitution);
            Vec3 disp = f.o_t[i] - f.n_t[i][k];
            g.intra.emplace_back(idx, i);
            g.intra_feat.row(idx) << float(disp.x()), float(disp.y()), float(disp.z()),
                float(disp.norm());
        }
        Vec3 v1 = f.o_t[i] - f.o_tm1[i];
        Vec3 v2 = f.o_tm1[i] - f.o_tm2[i];
        g.object_feat.row(i) << float(v1.x()), float(v1.y()), float(v1.z()), float(v2.x()),
            float(v2.y()), float(v2.z()), float(v1.norm()), float(v2.norm()), float(phi.mass),
            float(phi.friction), float(phi.restitution), assets[i].is_static ? 1.0f : 0.0f;
    }

    // Collision edges: every ordered pair (i, j), i's nodes against j's field.
    std::vector<float> feat_rows;
    std::vector<Vec3> local;
    std::vector<int> candidates;
    for (int i = 0; i < I; ++i) {
        for (int j = 0; j < I; ++j) {
            if (i == j) continue;
            if (assets[i].is_static && assets[j].is_static) continue;
            double bound = assets[j].field.bounding_radius();
            bool unbounded = !std::isfinite(bound);

            candidates.clear();
            local.clear();
            for (std::size_t k = 0; k < f.n_t[i].size(); ++k) {
                const Vec3& n = f.n_t[i][k];
                if (!unbounded && (n - f.tf_t[j].p).norm() > bound + D) continue;
                candidates.push_back(int(k));
                local.push_back(f.tf_t[j].apply_inverse(n));
            }
            if (candidates.empty()) continue;
            auto queries = assets[j].field.query_batch(local);
            for (std::size_t c = 0; c < candidates.size(); ++c) {
                if (queries[c].d > D) continue;
                int k = candidates[c];
                const Vec3& n = f.n_t[i][k];
                Vec3 cpt = n - queries[c].d * f.tf_t[j].rotate(queries[c].gradient);
                Vec3 dn = cpt - n;
                Vec3 dobj = cpt - f.o_t[j];
                g.coll.push_back({g.object_offset[i] + k, j, queries[c].d});
                feat_rows.insert(feat_rows.end(),
                                 {float(dn.x()), float(dn.y()), float(dn.z()), float(dobj.x()),
                                  float(dobj.y()), float(dobj.z()), float(dn.norm()),
                                  float(dobj.norm())});
            }
        }
    }
    g.coll_feat.resize(g.coll.size(), 8);
    for (std::size_t e = 0; e < g.coll.size(); ++e)
        for (int c = 0; c < 8; ++c) g.coll_feat(e, c) = feat_rows[e * 8 + c];

    if (opts.node_pair_radius) detail::count_node_pairs(f, assets, *opts.node_pair_radius, g);
    return g;
}

inline SimGraph build_graph(const SceneState& state, const std::vector<ObjectAsset>& assets,
                            const GraphBuildOptions& opts = {}) {
    return build_graph(frames_from_state(state, assets), assets, opts);
}

}  // namespace sdfsim::scene
