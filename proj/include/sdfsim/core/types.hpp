#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <stdexcept>
#include <string>

namespace sdfsim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// Row-major float matrices for batched network math; rows are samples.
using MatF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowF = Eigen::RowVectorXf;
using VecF = Eigen::VectorXf;

using MatD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// All thrown errors carry a machine-parsable "category: message" string.
class Error : public std::runtime_error {
public:
    Error(const std::string& category, const std::string& message)
        : std::runtime_error(category + ": " + message), category_(category) {}
    const std::string& category() const { return category_; }

private:
    std::string category_;
};

inline void require(bool cond, const std::string& category, const std::string& message) {
    if (!cond) throw Error(category, message);
}

}  // namespace sdfsim
