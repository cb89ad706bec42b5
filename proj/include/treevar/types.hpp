#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace treevar {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Matrixd = MatrixX<double>;
using Vectord = VectorX<double>;
using RowVectord = RowVectorX<double>;

/// Thrown when a value violates a documented precondition.
class invalid_input : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation detects an internally inconsistent result.
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace treevar
