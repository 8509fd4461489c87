#pragma once

#include "sdfsim/core/types.hpp"

namespace sdfsim::scene {

// Pose of a rigid body: translation plus unit-quaternion rotation.
struct RigidTransform {
    Vec3 p = Vec3::Zero();
    Quat q = Quat::Identity();

    static RigidTransform identity() { return {}; }

    Vec3 apply(const Vec3& x) const { return q * x + p; }
    Vec3 apply_inverse(const Vec3& x) const { return q.conjugate() * (x - p); }
    Vec3 rotate(const Vec3& v) const { return q * v; }
    Vec3 rotate_inverse(const Vec3& v) const { return q.conjugate() * v; }

    RigidTransform inverse() const {
        RigidTransform t;
        t.q = q.conjugate();
        t.p = -(t.q * p);
        return t;
    }

    // this ∘ other: apply `other` first.
    RigidTransform compose(const RigidTransform& other) const {
        RigidTransform t;
        t.q = (q * other.q).normalized();
        t.p = q * other.p + p;
        return t;
    }

    void renormalize() { q.normalize(); }

    bool is_unit(double tol = 1e-9) const { return std::abs(q.norm() - 1.0) < tol; }
};

}  // namespace sdfsim::scene
