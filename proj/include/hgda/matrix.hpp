#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hgda {

/// Dense row-major double matrix used for features, activations and parameters.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline std::string shape_str(Index rows, Index cols) {
    return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

inline std::string shape_str(const Matrix& m) { return shape_str(m.rows(), m.cols()); }

}  // namespace hgda
