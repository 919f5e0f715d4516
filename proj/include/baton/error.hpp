#pragma once

#include <stdexcept>

namespace baton {

/// A caller broke a documented precondition (dimension mismatch, bad config).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The object cannot perform the requested operation (e.g. iid sampling of a
/// posterior, gradients of a hierarchical prior).
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A numerical procedure could not produce a trustworthy result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace baton
