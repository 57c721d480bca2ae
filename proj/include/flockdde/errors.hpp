#pragma once

#include <stdexcept>
#include <string>

namespace flockdde {

// Argument outside the mathematical domain of an operation (negative radius,
// negative delay, a not in (0,1), ...).
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

// Operation not available for this kernel family (e.g. tail integral of a
// tabulated kernel).
class UnsupportedError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class InvalidDatumError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// A delayed query fell outside the retained history window. Always an
// integrator misconfiguration (h > tau, or a pruned buffer).
class OutOfWindowError : public std::out_of_range {
  public:
    using std::out_of_range::out_of_range;
};

// Sum of kernel weights underflowed; the kernel decayed past representable
// range for the current configuration.
class SingularNormalizerError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Not enough frames to evaluate a windowed diagnostic yet.
class NotReadyError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

} // namespace flockdde
