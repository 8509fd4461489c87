#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "sdfsim/core/types.hpp"
#include "sdfsim/geometry/mesh.hpp"

namespace sdfsim::geo {

// Closest point on triangle (a, b, c) to p. Region-based projection; the
// vertex/edge/face cases are tested in a fixed order so ties resolve
// deterministically.
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    Vec3 bp = p - b;
    double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        double v = d1 / (d1 - d3);
        return a + v * ab;
    }

    Vec3 cp = p - c;
    double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        double w = d2 / (d2 - d6);
        return a + w * ac;
    }

    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + w * (c - b);
    }

    double denom = 1.0 / (va + vb + vc);
    double v = vb * denom, w = vc * denom;
    return a + ab * v + ac * w;
}

struct SignedDistance {
    double d = 0.0;          // signed; |d| = distance to the closest point
    Vec3 closest = Vec3::Zero();
    int triangle = -1;       // index of the closest triangle
    bool sign_reliable = true;
};

namespace detail {
inline double aabb_dist2(const Vec3& p, const Vec3& lo, const Vec3& hi) {
    double s = 0.0;
    for (int k = 0; k < 3; ++k) {
        double d = std::max({lo[k] - p[k], 0.0, p[k] - hi[k]});
        s += d * d;
    }
    return s;
}

// cos(75 deg); the sign is unreliable when the angle between (y - y*) and the
// closest triangle normal falls in [75, 105] degrees.
inline constexpr double kReliableCos = 0.25881904510252074;

inline SignedDistance finish(const TriangleMesh& mesh, const Vec3& y, double best_d2, int best_tri,
                             const Vec3& best_point) {
    SignedDistance out;
    out.triangle = best_tri;
    out.closest = best_point;
    Vec3 delta = y - best_point;
    double dist = std::sqrt(best_d2);
    if (dist < 1e-12) {
        out.d = 0.0;
        out.sign_reliable = true;
        return out;
    }
    double cosang = mesh.normals[best_tri].dot(delta) / dist;
    out.d = cosang >= 0.0 ? dist : -dist;
    out.sign_reliable = std::abs(cosang) > kReliableCos;
    return out;
}
}  // namespace detail

// Exhaustive reference query; ties broken toward the smallest triangle index.
inline SignedDistance signed_distance_scan(const TriangleMesh& mesh, const Vec3& y) {
    double best = std::numeric_limits<double>::infinity();
    int best_tri = -1;
    Vec3 best_point = Vec3::Zero();
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (mesh.normals[t].isZero()) continue;  // degenerate
        Vec3 q = closest_point_on_triangle(y, mesh.vertices[mesh.triangles[t][0]],
                                           mesh.vertices[mesh.triangles[t][1]],
                                           mesh.vertices[mesh.triangles[t][2]]);
        double d2 = (y - q).squaredNorm();
        if (d2 < best || (d2 == best && int(t) < best_tri)) {
            best = d2;
            best_tri = int(t);
            best_point = q;
        }
    }
    require(best_tri >= 0, "geometry", "signed distance query on an empty mesh");
    return detail::finish(mesh, y, best, best_tri, best_point);
}

// Exact signed-distance queries against a triangle mesh through a binary
// bounding-volume hierarchy: median split on the longest axis, leaves of at
// most 4 triangles. Immutable and safe for concurrent queries once built.
class DistanceOracle {
public:
    explicit DistanceOracle(TriangleMesh mesh) : mesh_(std::move(mesh)) {
        mesh_.validate();
        for (std::size_t t = 0; t < mesh_.triangles.size(); ++t)
            if (!mesh_.normals[t].isZero()) order_.push_back(int(t));
        require(!order_.empty(), "geometry", "distance oracle over an empty or fully degenerate mesh");
        nodes_.reserve(order_.size() * 2);
        build(0, int(order_.size()));
    }

    const TriangleMesh& mesh() const { return mesh_; }

    SignedDistance signed_distance(const Vec3& y) const {
        double best = std::numeric_limits<double>::infinity();
        int best_tri = std::numeric_limits<int>::max();
        Vec3 best_point = Vec3::Zero();

        // Explicit stack; visit the nearer child first.
        int stack[64];
        int top = 0;
        stack[top++] = 0;
        while (top > 0) {
            const Node& node = nodes_[stack[--top]];
            if (detail::aabb_dist2(y, node.lo, node.hi) > best) continue;
            if (node.count > 0) {
                for (int i = node.begin; i < node.begin + node.count; ++i) {
                    int t = order_[i];
                    Vec3 q = closest_point_on_triangle(y, mesh_.vertices[mesh_.triangles[t][0]],
                                                       mesh_.vertices[mesh_.triangles[t][1]],
                                                       mesh_.vertices[mesh_.triangles[t][2]]);
                    double d2 = (y - q).squaredNorm();
                    if (d2 < best || (d2 == best && t < best_tri)) {
                        best = d2;
                        best_tri = t;
                        best_point = q;
                    }
                }
            } else {
                double dl = detail::aabb_dist2(y, nodes_[node.left].lo, nodes_[node.left].hi);
                double dr = detail::aabb_dist2(y, nodes_[node.right].lo, nodes_[node.right].hi);
                // Push the farther child first so the nearer one is processed next.
                if (dl <= dr) {
                    stack[top++] = node.right;
                    stack[top++] = node.left;
                } else {
                    stack[top++] = node.left;
                    stack[top++] = node.right;
                }
            }
        }
        return detail::finish(mesh_, y, best, best_tri, best_point);
    }

private:
    struct Node {
        Vec3 lo, hi;
        int left = -1, right = -1;
        int begin = 0, count = 0;  // count > 0 marks a leaf
    };

    static constexpr int kLeafSize = 4;

    Vec3 tri_centroid(int t) const {
        return (mesh_.vertices[mesh_.triangles[t][0]] + mesh_.vertices[mesh_.triangles[t][1]] +
                mesh_.vertices[mesh_.triangles[t][2]]) /
               3.0;
    }

    int build(int begin, int end) {
        Node node;
        node.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
        node.hi = -node.lo;
        for (int i = begin; i < end; ++i)
            for (int corner : mesh_.triangles[order_[i]]) {
                node.lo = node.lo.cwiseMin(mesh_.vertices[corner]);
                node.hi = node.hi.cwiseMax(mesh_.vertices[corner]);
            }
        int index = int(nodes_.size());
        nodes_.push_back(node);
        if (end - begin <= kLeafSize) {
            nodes_[index].begin = begin;
            nodes_[index].count = end - begin;
            return index;
        }
        int axis = 0;
        Vec3 extent = node.hi - node.lo;
        extent.maxCoeff(&axis);
        int mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](int a, int b) {
                             double ca = tri_centroid(a)[axis], cb = tri_centroid(b)[axis];
                             return ca < cb || (ca == cb && a < b);
                         });
        int left = build(begin, mid);
        int right = build(mid, end);
        nodes_[index].left = left;
        nodes_[index].right = right;
        return index;
    }

    TriangleMesh mesh_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
};

}  // namespace sdfsim::geo
