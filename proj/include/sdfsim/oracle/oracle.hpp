#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "sdfsim/geometry/analytic.hpp"
#include "sdfsim/scene/rigid_transform.hpp"
#include "sdfsim/scene/shape_spec.hpp"

namespace sdfsim::phys {

// Rigid body with exact contact geometry (sphere or box) plus the z = 0
// half-space floor handled by the stepper itself.
struct OracleBody {
    scene::ShapeSpec shape;
    double mass = 1.0;
    double restitution = 0.5;
    double friction = 0.3;

    Vec3 p = Vec3::Zero();
    Quat q = Quat::Identity();
    Vec3 v = Vec3::Zero();
    Vec3 w = Vec3::Zero();  // angular velocity, world frame

    Vec3 inertia_body = Vec3::Ones();  // principal moments

    static OracleBody sphere(double r, double mass, double e, double mu) {
        OracleBody b;
        b.shape = scene::ShapeSpec::sphere(r);
        b.mass = mass;
        b.restitution = e;
        b.friction = mu;
        double i = 0.4 * mass * r * r;
        b.inertia_body = Vec3(i, i, i);
        return b;
    }

    static OracleBody box(const Vec3& he, double mass, double e, double mu) {
        OracleBody b;
        b.shape = scene::ShapeSpec::box(he);
        b.mass = mass;
        b.restitution = e;
        b.friction = mu;
        Vec3 s = 2.0 * he;
        b.inertia_body = (mass / 12.0) * Vec3(s.y() * s.y() + s.z() * s.z(),
                                              s.x() * s.x() + s.z() * s.z(),
                                              s.x() * s.x() + s.y() * s.y());
        return b;
    }

    double bounding_radius() const {
        return shape.kind == scene::ShapeSpec::Kind::Sphere ? shape.radius
                                                            : shape.half_extents.norm();
    }

    Mat3 inertia_world_inv() const {
        Mat3 r = q.toRotationMatrix();
        return r * inertia_body.cwiseInverse().asDiagonal() * r.transpose();
    }

    Vec3 velocity_at(const Vec3& point) const { return v + w.cross(point - p); }

    double kinetic_energy() const {
        Mat3 r = q.toRotationMatrix();
        Vec3 wl = r.transpose() * w;
        return 0.5 * mass * v.squaredNorm() + 0.5 * wl.dot(inertia_body.cwiseProduct(wl));
    }
};

struct OracleConfig {
    Vec3 gravity = Vec3(0, 0, -9.8);
    int solver_iterations = 8;
    bool has_floor = true;
    // Contacts closer than this are treated as touching/resting; it is the
    // oracle's resting tolerance, the unit penetration metrics are scaled by.
    double resting_tolerance = 1e-3;
    double max_penetration = 1e-4;  // positional projection target
    double restitution_threshold_factor = 3.0;  // bounce only above this x |g| dt
};

namespace detail {

// Contact with normal pointing from A into B (the direction pushing B away).
// b < 0 marks the static floor as body A.
struct Contact {
    int a = -1, b = -1;
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3(0, 0, 1);
    double gap = 0.0;
    double impulse_n = 0.0;  // accumulated
    std::array<double, 2> impulse_t = {0.0, 0.0};
    Vec3 t1, t2;
    double target_vn = 0.0;
};

inline void tangent_basis(const Vec3& n, Vec3& t1, Vec3& t2) {
    t1 = std::abs(n.x()) < 0.9 ? Vec3(1, 0, 0).cross(n).normalized()
                               : Vec3(0, 1, 0).cross(n).normalized();
    t2 = n.cross(t1);
}

inline std::array<Vec3, 8> box_corners(const OracleBody& b) {
    std::array<Vec3, 8> out;
    const Vec3& h = b.shape.half_extents;
    int i = 0;
    for (int sx = -1; sx <= 1; sx += 2)
        for (int sy = -1; sy <= 1; sy += 2)
            for (int sz = -1; sz <= 1; sz += 2)
                out[i++] = b.p + b.q * Vec3(sx * h.x(), sy * h.y(), sz * h.z());
    return out;
}

inline void closest_segment_segment(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2,
                                    Vec3& c1, Vec3& c2, double& s, double& t) {
    Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
    double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
    double c = d1.dot(r), b = d1.dot(d2);
    double denom = a * e - b * b;
    s = denom > 1e-14 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
    t = (b * s + f) / std::max(e, 1e-14);
    if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / std::max(a, 1e-14), 0.0, 1.0);
    } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / std::max(a, 1e-14), 0.0, 1.0);
    }
    c1 = p1 + d1 * s;
    c2 = p2 + d2 * t;
}

}  // namespace detail

// Analytic rigid-body stepper: semi-implicit Euler with speculative contacts,
// sequential impulses (restitution on the normal, Coulomb-clamped friction)
// and a linear positional projection that keeps residual penetration under
// max_penetration.
class RigidOracle {
public:
    explicit RigidOracle(OracleConfig cfg = {}) : cfg_(cfg) {}

    const OracleConfig& config() const { return cfg_; }

    // Largest penetration depth across all contacts (diagnostic; >= 0).
    double last_max_penetration() const { return last_max_penetration_; }

    void step(std::vector<OracleBody>& bodies, double dt) {
        std::vector<detail::Contact> contacts = find_contacts(bodies, dt);

        for (auto& b : bodies) b.v += cfg_.gravity * dt;

        // Restitution targets from post-gravity approach speeds. The target
        // accounts for the remaining free fall across the current gap so a
        // bounce at detection height restores the energy a bounce at contact
        // would: out^2 = e^2 (v^2 + 2 a g) - 2 a g with a the gap, g the
        // relative normal gravity.
        const double bounce_threshold =
            cfg_.restitution_threshold_factor * cfg_.gravity.norm() * dt;
        for (auto& c : contacts) {
            const OracleBody* A = c.a >= 0 ? &bodies[c.a] : nullptr;
            OracleBody& B = bodies[c.b];
            Vec3 vrel = B.velocity_at(c.point) - (A ? A->velocity_at(c.point) : Vec3::Zero());
            double vn = vrel.dot(c.normal);
            double gap = std::max(c.gap, 0.0);
            c.target_vn = -gap / dt;  // speculative: may close at most to touch
            // Relative normal gravity: zero between dynamic bodies (equal pull
            // cancels), the full component against the static floor.
            double g_pull = c.a >= 0 ? 0.0 : std::max(0.0, -c.normal.dot(cfg_.gravity));
            double e = B.restitution * (A ? A->restitution : 1.0);
            if (vn < -bounce_threshold && e > 0.0) {
                double v_td2 = vn * vn + 2.0 * g_pull * gap;
                double out2 = e * e * v_td2 - 2.0 * g_pull * gap;
                if (out2 > 0.0) c.target_vn = std::max(c.target_vn, std::sqrt(out2));
            }
            detail::tangent_basis(c.normal, c.t1, c.t2);
        }

        for (int it = 0; it < cfg_.solver_iterations; ++it)
            for (auto& c : contacts) solve_contact(bodies, c);

        for (auto& b : bodies) {
            b.p += b.v * dt;
            Quat dq(0.0, b.w.x() * 0.5 * dt, b.w.y() * 0.5 * dt, b.w.z() * 0.5 * dt);
            b.q.coeffs() += (dq * b.q).coeffs();
            b.q.normalize();
        }

        project_positions(bodies, dt);
    }

    double total_energy(const std::vector<OracleBody>& bodies) const {
        double e = 0.0;
        for (const auto& b : bodies) e += b.kinetic_energy() - b.mass * cfg_.gravity.dot(b.p);
        return e;
    }

    Vec3 total_momentum(const std::vector<OracleBody>& bodies) const {
        Vec3 m = Vec3::Zero();
        for (const auto& b : bodies) m += b.mass * b.v;
        return m;
    }

private:
    // Margin within which a pair enters the solver this step.
    double detect_margin(const OracleBody& a, const OracleBody& b, double dt) const {
        double closing = a.v.norm() + b.v.norm() + a.w.norm() * a.bounding_radius() +
                         b.w.norm() * b.bounding_radius();
        return cfg_.resting_tolerance + closing * dt;
    }

    std::vector<detail::Contact> find_contacts(const std::vector<OracleBody>& bodies,
                                               double dt) const {
        std::vector<detail::Contact> out;
        for (int i = 0; i < int(bodies.size()); ++i) {
            if (cfg_.has_floor) add_floor_contacts(bodies, i, dt, out);
            for (int j = i + 1; j < int(bodies.size()); ++j) add_pair_contacts(bodies, i, j, dt, out);
        }
        return out;
    }

    void add_floor_contacts(const std::vector<OracleBody>& bodies, int i, double dt,
                            std::vector<detail::Contact>& out) const {
        const OracleBody& b = bodies[i];
        double margin = cfg_.resting_tolerance + (b.v.norm() + b.w.norm() * b.bounding_radius()) * dt;
        if (b.shape.kind == scene::ShapeSpec::Kind::Sphere) {
            double gap = b.p.z() - b.shape.radius;
            if (gap < margin)
                out.push_back({-1, i, b.p - Vec3(0, 0, b.shape.radius), Vec3(0, 0, 1), gap});
        } else {
            for (const Vec3& corner : detail::box_corners(b)) {
                if (corner.z() < margin) out.push_back({-1, i, corner, Vec3(0, 0, 1), corner.z()});
            }
        }
    }

    void add_pair_contacts(const std::vector<OracleBody>& bodies, int i, int j, double dt,
                           std::vector<detail::Contact>& out) const {
        const OracleBody& A = bodies[i];
        const OracleBody& B = bodies[j];
        double margin = detect_margin(A, B, dt);
        double center_gap = (B.p - A.p).norm() - A.bounding_radius() - B.bounding_radius();
        if (center_gap > margin) return;

        using Kind = scene::ShapeSpec::Kind;
        if (A.shape.kind == Kind::Sphere && B.shape.kind == Kind::Sphere) {
            Vec3 d = B.p - A.p;
            double dist = d.norm();
            Vec3 n = dist > 1e-12 ? Vec3(d / dist) : Vec3(0, 0, 1);
            double gap = dist - A.shape.radius - B.shape.radius;
            if (gap < margin)
                out.push_back({i, j, A.p + n * (A.shape.radius + gap * 0.5), n, gap});
            return;
        }
        if (A.shape.kind == Kind::Sphere || B.shape.kind == Kind::Sphere) {
            // Normalize to (box, sphere); flip the contact if needed.
            bool flipped = A.shape.kind == Kind::Sphere;
            const OracleBody& box = flipped ? B : A;
            const OracleBody& sph = flipped ? A : B;
            geo::AnalyticShape field = geo::AnalyticShape::box(box.shape.half_extents);
            Vec3 local = box.q.conjugate() * (sph.p - box.p);
            auto r = field.sdf(local);
            double gap = r.d - sph.shape.radius;
            if (gap < margin) {
                Vec3 n_box_out = box.q * r.grad;  // pushes the sphere away from the box
                Vec3 point = sph.p - n_box_out * sph.shape.radius;
                if (!flipped) {
                    out.push_back({i, j, point, n_box_out, gap});
                } else {
                    out.push_back({i, j, point, -n_box_out, gap});
                }
            }
            return;
        }
        add_box_box_contacts(bodies, i, j, margin, out);
    }

    // Box-box: corners of each box against the other's exact field, plus
    // edge-edge closest points. Near-duplicate points are dropped.
    void add_box_box_contacts(const std::vector<OracleBody>& bodies, int i, int j, double margin,
                              std::vector<detail::Contact>& out) const {
        const OracleBody& A = bodies[i];
        const OracleBody& B = bodies[j];
        std::vector<detail::Contact> found;
        auto corners_vs = [&](const OracleBody& body, const OracleBody& other, bool body_is_a) {
            geo::AnalyticShape field = geo::AnalyticShape::box(other.shape.half_extents);
            for (const Vec3& corner : detail::box_corners(body)) {
                Vec3 local = other.q.conjugate() * (corner - other.p);
                auto r = field.sdf(local);
                if (r.d < margin) {
                    Vec3 n_other_out = other.q * r.grad;  // pushes `body` away from `other`
                    // Contact normal must push B away from A.
                    Vec3 n = body_is_a ? Vec3(-n_other_out) : n_other_out;
                    found.push_back({i, j, corner - n_other_out * std::min(r.d, 0.0), n, r.d});
                }
            }
        };
        corners_vs(A, B, true);
        corners_vs(B, A, false);

        // Edge-edge pairs, for crossing configurations no corner test sees.
        static const int edge_pairs[12][2] = {{0, 1}, {0, 2}, {1, 3}, {2, 3}, {4, 5}, {4, 6},
                                              {5, 7}, {6, 7}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
        auto ca = detail::box_corners(A);
        auto cb = detail::box_corners(B);
        for (const auto& ea : edge_pairs) {
            for (const auto& eb : edge_pairs) {
                Vec3 c1, c2;
                double s, t;
                detail::closest_segment_segment(ca[ea[0]], ca[ea[1]], cb[eb[0]], cb[eb[1]], c1, c2, s,
                                                t);
                if (s <= 1e-9 || s >= 1.0 - 1e-9 || t <= 1e-9 || t >= 1.0 - 1e-9) continue;
                double dist = (c2 - c1).norm();
                if (dist >= margin || dist < 1e-12) continue;
                Vec3 n = (c2 - c1) / dist;
                // Reject if the direction does not separate the centers.
                if (n.dot(B.p - A.p) < 0.0) continue;
                found.push_back({i, j, 0.5 * (c1 + c2), n, dist});
            }
        }

        for (const auto& c : found) {
            bool dup = false;
            for (const auto& kept : out)
                if (kept.a == i && kept.b == j && (kept.point - c.point).norm() < 1e-4) dup = true;
            if (!dup) out.push_back(c);
        }
    }

    void solve_contact(std::vector<OracleBody>& bodies, detail::Contact& c) const {
        OracleBody* A = c.a >= 0 ? &bodies[c.a] : nullptr;
        OracleBody& B = bodies[c.b];
        Vec3 ra = A ? c.point - A->p : Vec3::Zero();
        Vec3 rb = c.point - B.p;

        auto effective_mass = [&](const Vec3& dir) {
            double k = 1.0 / B.mass + rb.cross(dir).dot(B.inertia_world_inv() * rb.cross(dir));
            if (A) k += 1.0 / A->mass + ra.cross(dir).dot(A->inertia_world_inv() * ra.cross(dir));
            return k;
        };
        auto apply = [&](const Vec3& impulse) {
            B.v += impulse / B.mass;
            B.w += B.inertia_world_inv() * rb.cross(impulse);
            if (A) {
                A->v -= impulse / A->mass;
                A->w -= A->inertia_world_inv() * ra.cross(impulse);
            }
        };

        Vec3 vrel = B.velocity_at(c.point) - (A ? A->velocity_at(c.point) : Vec3::Zero());
        double vn = vrel.dot(c.normal);
        double dl = -(vn - c.target_vn) / effective_mass(c.normal);
        double new_impulse = std::max(0.0, c.impulse_n + dl);
        apply(c.normal * (new_impulse - c.impulse_n));
        c.impulse_n = new_impulse;

        double mu = std::sqrt(std::max(0.0, B.friction * (A ? A->friction : 1.0)));
        if (mu <= 0.0 || c.impulse_n <= 0.0) return;
        const Vec3 tangents[2] = {c.t1, c.t2};
        for (int td = 0; td < 2; ++td) {
            vrel = B.velocity_at(c.point) - (A ? A->velocity_at(c.point) : Vec3::Zero());
            double vt = vrel.dot(tangents[td]);
            double dt_imp = -vt / effective_mass(tangents[td]);
            double bound = mu * c.impulse_n;
            double new_t = std::clamp(c.impulse_t[td] + dt_imp, -bound, bound);
            apply(tangents[td] * (new_t - c.impulse_t[td]));
            c.impulse_t[td] = new_t;
        }
    }

    void project_positions(std::vector<OracleBody>& bodies, double dt) {
        last_max_penetration_ = 0.0;
        for (int pass = 0; pass < 4; ++pass) {
            auto contacts = find_contacts(bodies, dt);
            double worst = 0.0;
            for (const auto& c : contacts) {
                double pen = -c.gap;
                if (pen <= cfg_.max_penetration) continue;
                worst = std::max(worst, pen);
                double push = pen - 0.5 * cfg_.max_penetration;
                OracleBody* A = c.a >= 0 ? &bodies[c.a] : nullptr;
                OracleBody& B = bodies[c.b];
                if (A) {
                    double wa = 1.0 / A->mass, wb = 1.0 / B.mass;
                    double total = wa + wb;
                    A->p -= c.normal * (push * wa / total);
                    B.p += c.normal * (push * wb / total);
                } else {
                    B.p += c.normal * push;
                }
            }
            if (pass == 0) last_max_penetration_ = worst;
            if (worst <= cfg_.max_penetration) break;
            if (pass == 3 && worst > 0.2)
                throw Error("oracle", "unresolvable deep penetration (" + std::to_string(worst) + " m)");
        }
    }

    OracleConfig cfg_;
    double last_max_penetration_ = 0.0;
};

}  // namespace sdfsim::phys
