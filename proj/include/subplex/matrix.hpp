#pragma once

#include <Eigen/Dense>

namespace subplex {

/// Row-major dense matrix; rows are instances.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

}  // namespace subplex
