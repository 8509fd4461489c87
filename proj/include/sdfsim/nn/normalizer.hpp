#pragma once

#include <Eigen/Dense>

#include "sdfsim/core/types.hpp"

namespace sdfsim::nn {

// Running mean/variance transform. Accumulates online in double precision;
// once frozen the transform is a fixed affine map.
class Normalizer {
public:
    Normalizer() = default;
    explicit Normalizer(int dim)
        : dim_(dim), sum_(Eigen::VectorXd::Zero(dim)), sumsq_(Eigen::VectorXd::Zero(dim)) {}

    static constexpr double kVarianceFloor = 1e-8;

    int dim() const { return dim_; }
    double count() const { return count_; }
    bool frozen() const { return frozen_; }
    void freeze() { frozen_ = true; }

    void update(const MatF& rows) {
        if (frozen_) return;
        require(rows.cols() == dim_, "shape", "normalizer update dimension mismatch");
        for (Eigen::Index r = 0; r < rows.rows(); ++r) {
            Eigen::VectorXd x = rows.row(r).cast<double>();
            sum_ += x;
            sumsq_ += x.cwiseProduct(x);
        }
        count_ += double(rows.rows());
    }

    Eigen::VectorXd mean() const {
        check_ready();
        return sum_ / count_;
    }

    Eigen::VectorXd variance() const {
        check_ready();
        Eigen::VectorXd m = sum_ / count_;
        return (sumsq_ / count_ - m.cwiseProduct(m)).cwiseMax(kVarianceFloor);
    }

    // (x - mean) / std, per column. Works on float batches in training and on
    // double matrices where tests need full precision.
    template <typename Mat>
    Mat apply(const Mat& x) const {
        using Scalar = typename Mat::Scalar;
        check_ready();
        require(x.cols() == dim_, "shape", "normalizer apply dimension mismatch");
        Eigen::Matrix<Scalar, 1, Eigen::Dynamic> mu = mean().template cast<Scalar>().transpose();
        Eigen::Matrix<Scalar, 1, Eigen::Dynamic> inv_std =
            variance().cwiseSqrt().cwiseInverse().template cast<Scalar>().transpose();
        return ((x.rowwise() - mu).array().rowwise() * inv_std.array()).matrix();
    }

    template <typename Mat>
    Mat invert(const Mat& y) const {
        using Scalar = typename Mat::Scalar;
        check_ready();
        require(y.cols() == dim_, "shape", "normalizer invert dimension mismatch");
        Eigen::Matrix<Scalar, 1, Eigen::Dynamic> mu = mean().template cast<Scalar>().transpose();
        Eigen::Matrix<Scalar, 1, Eigen::Dynamic> sd =
            variance().cwiseSqrt().template cast<Scalar>().transpose();
        return ((y.array().rowwise() * sd.array()).matrix().rowwise() + mu);
    }

    // Raw state access for serialization.
    const Eigen::VectorXd& raw_sum() const { return sum_; }
    const Eigen::VectorXd& raw_sumsq() const { return sumsq_; }
    void restore(const Eigen::VectorXd& sum, const Eigen::VectorXd& sumsq, double count, bool frozen) {
        require(sum.size() == dim_ && sumsq.size() == dim_, "shape", "normalizer restore dimension mismatch");
        sum_ = sum;
        sumsq_ = sumsq;
        count_ = count;
        frozen_ = frozen;
    }

private:
    void check_ready() const {
        require(count_ >= 2.0, "state", "normalizer used before seeing at least 2 samples");
    }

    int dim_ = 0;
    Eigen::VectorXd sum_, sumsq_;
    double count_ = 0.0;
    bool frozen_ = false;
};

}  // namespace sdfsim::nn
