#pragma once

#include <Eigen/SVD>
#include <vector>

#include "sdfsim/scene/rigid_transform.hpp"

namespace sdfsim::sim {

// Least-squares rigid fit mapping reference points onto predicted points:
// rotation from the SVD of the centered cross-covariance with the determinant
// corrected to +1, translation from the centroids.
inline scene::RigidTransform shape_match(const std::vector<Vec3>& reference,
                                         const std::vector<Vec3>& predicted) {
    require(reference.size() == predicted.size(), "shape", "shape match: point count mismatch");
    require(reference.size() >= 3, "shape", "shape match needs at least 3 points");

    Vec3 cr = Vec3::Zero(), cp = Vec3::Zero();
    for (std::size_t i = 0; i < reference.size(); ++i) {
        cr += reference[i];
        cp += predicted[i];
    }
    cr /= double(reference.size());
    cp /= double(predicted.size());

    Mat3 cov = Mat3::Zero();
    for (std::size_t i = 0; i < reference.size(); ++i)
        cov += (predicted[i] - cp) * (reference[i] - cr).transpose();

    // Degenerate (collinear/coincident) point sets leave the fit underdetermined.
    Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    require(svd.singularValues()(1) > 1e-12 * std::max(1.0, svd.singularValues()(0)), "shape",
            "shape match: degenerate point set");

    Mat3 u = svd.matrixU(), v = svd.matrixV();
    Mat3 r = u * v.transpose();
    if (r.determinant() < 0.0) {
        u.col(2) *= -1.0;
        r = u * v.transpose();
    }

    scene::RigidTransform t;
    t.q = Quat(r).normalized();
    t.p = cp - r * cr;
    return t;
}

inline double shape_match_residual(const scene::RigidTransform& t, const std::vector<Vec3>& reference,
                                   const std::vector<Vec3>& predicted) {
    double s = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i)
        s += (predicted[i] - t.apply(reference[i])).squaredNorm();
    return s;
}

}  // namespace sdfsim::sim
