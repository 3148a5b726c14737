#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace osp {

using Real = double;
using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowMajorMatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Theta = Eigen::VectorXd;

/// Invalid model, region or configuration parameters.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation not defined for the given kind of input (e.g. exact set algebra on a continuous state space).
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A caller broke a protocol requirement, such as reusing an optimization stream for evaluation.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Input exceeds an enumeration guard.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// A fit has no usable data (e.g. zero empirical mass over the whole grid).
class DegenerateFit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ParameterError(message);
}

}  // namespace osp
