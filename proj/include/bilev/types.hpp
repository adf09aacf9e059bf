#pragma once

#include <limits>

#include <Eigen/Dense>

namespace bilev {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace bilev
