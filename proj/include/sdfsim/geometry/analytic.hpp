#pragma once

#include <cmath>
#include <string>

#include "sdfsim/core/types.hpp"

namespace sdfsim::geo {

// Closed-form signed-distance shapes used as ground truth for learned fields
// and as the floor's native representation. Gradients are exact and unit-norm
// away from the medial axis.
struct AnalyticShape {
    enum class Kind { Sphere, Box, Torus, HalfSpace };

    Kind kind = Kind::Sphere;
    double radius = 0.5;          // sphere
    Vec3 half_extents = Vec3(0.5, 0.5, 0.5);  // box
    double major_radius = 0.35, minor_radius = 0.15;  // torus, axis z
    Vec3 plane_normal = Vec3(0, 0, 1);  // half-space: inside where n.y < offset
    double plane_offset = 0.0;

    static AnalyticShape sphere(double r) {
        AnalyticShape s;
        s.kind = Kind::Sphere;
        s.radius = r;
        return s;
    }
    static AnalyticShape box(const Vec3& he) {
        AnalyticShape s;
        s.kind = Kind::Box;
        s.half_extents = he;
        return s;
    }
    static AnalyticShape torus(double major, double minor) {
        AnalyticShape s;
        s.kind = Kind::Torus;
        s.major_radius = major;
        s.minor_radius = minor;
        return s;
    }
    static AnalyticShape half_space(const Vec3& normal, double offset) {
        AnalyticShape s;
        s.kind = Kind::HalfSpace;
        s.plane_normal = normal.normalized();
        s.plane_offset = offset;
        return s;
    }

    struct Result {
        double d;
        Vec3 grad;
    };

    Result sdf(const Vec3& y) const {
        switch (kind) {
            case Kind::Sphere: {
                double n = y.norm();
                if (n < 1e-12) return {-radius, Vec3(0, 0, 1)};  // medial point; any direction
                return {n - radius, y / n};
            }
            case Kind::Box: {
                Vec3 a = y.cwiseAbs();
                Vec3 q = a - half_extents;
                Vec3 outside = q.cwiseMax(0.0);
                double out_len = outside.norm();
                if (out_len > 0.0) {
                    Vec3 g = outside / out_len;
                    for (int k = 0; k < 3; ++k) g[k] *= (y[k] < 0.0 ? -1.0 : 1.0);
                    return {out_len, g};
                }
                // Inside: distance to the nearest face; ties resolve to the first axis.
                int axis = 0;
                double m = q[0];
                for (int k = 1; k < 3; ++k)
                    if (q[k] > m) {
                        m = q[k];
                        axis = k;
                    }
                Vec3 g = Vec3::Zero();
                g[axis] = y[axis] < 0.0 ? -1.0 : 1.0;
                return {m, g};
            }
            case Kind::Torus: {
                double rho = std::hypot(y.x(), y.y());
                Eigen::Vector2d q(rho - major_radius, y.z());
                double qn = q.norm();
                if (qn < 1e-12) return {-minor_radius, Vec3(0, 0, 1)};
                Vec3 g;
                if (rho < 1e-12) {
                    g = Vec3(0, 0, q.y() / qn);  // on the axis, radial part undefined
                } else {
                    g = Vec3(q.x() / qn * y.x() / rho, q.x() / qn * y.y() / rho, q.y() / qn);
                }
                return {qn - minor_radius, g};
            }
            case Kind::HalfSpace:
                return {plane_normal.dot(y) - plane_offset, plane_normal};
        }
        return {0.0, Vec3::Zero()};
    }

    std::string name() const {
        switch (kind) {
            case Kind::Sphere: return "sphere";
            case Kind::Box: return "box";
            case Kind::Torus: return "torus";
            case Kind::HalfSpace: return "half_space";
        }
        return "?";
    }
};

}  // namespace sdfsim::geo
