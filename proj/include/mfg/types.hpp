#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mfg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised when an operation receives inputs outside its domain.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative method fails to reach its tolerance.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a Lagrangian model produces non-finite values or lacks
/// constants an operation needs.
class InvalidModel : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Mat& m) { return m.allFinite(); }

/// Spectral norm (largest singular value).
double operator_norm(const Mat& m);

}  // namespace mfg
