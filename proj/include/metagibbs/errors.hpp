// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace metagibbs {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Two distributions were defined over different outcome spaces.
class DomainMismatch : public Error {
 public:
  using Error::Error;
};

/// An absolute-continuity requirement failed (mass where the reference is zero).
class SupportMismatch : public Error {
 public:
  using Error::Error;
};

/// A named axis does not exist in a joint distribution.
class UnknownAxis : public Error {
 public:
  using Error::Error;
};

/// A covariance matrix required to be positive definite is singular.
class SingularCovariance : public Error {
 public:
  using Error::Error;
};

/// Inverse temperature must be nonnegative.
class NegativeGamma : public Error {
 public:
  using Error::Error;
};

/// A prior is not supported on the declared hypothesis space.
class PriorSupportMismatch : public Error {
 public:
  using Error::Error;
};

/// gamma*Q is singular; carries a basis of the null space (columns).
class SingularPrecision : public Error {
 public:
  SingularPrecision(const std::string& what, std::vector<std::vector<double>> null_basis)
      : Error(what), null_basis_(std::move(null_basis)) {}
  const std::vector<std::vector<double>>& null_basis() const { return null_basis_; }

 private:
  std::vector<std::vector<double>> null_basis_;
};

/// Exact enumeration would exceed the configured state-space cap.
class StateSpaceTooLarge : public Error {
 public:
  StateSpaceTooLarge(const std::string& what, double required_states)
      : Error(what), required_states_(required_states) {}
  double required_states() const { return required_states_; }

 private:
  double required_states_;
};

/// A property requiring a factorized prior was requested with a coupled prior.
class NonFactorizedPrior : public Error {
 public:
  using Error::Error;
};

/// alpha in {0,1} makes the joint posterior degenerate.
class DegenerateAlpha : public Error {
 public:
  using Error::Error;
};

/// Mutual information too small for a ratio to be meaningful.
class ZeroMutualInformation : public Error {
 public:
  using Error::Error;
};

/// Loss values fall outside the range a bound requires.
class LossRangeViolation : public Error {
 public:
  using Error::Error;
};

/// Array dimensions disagree with the declared layout.
class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

/// A probability table violates its construction invariants.
class InvalidDistribution : public Error {
 public:
  using Error::Error;
};

/// A configuration file failed schema validation.
class ConfigInvalid : public Error {
 public:
  using Error::Error;
};

}  // namespace metagibbs
