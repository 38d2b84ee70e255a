#pragma once

#include <stdexcept>
#include <string>

namespace trackuq {

/// Malformed structure: out-of-range index, mismatched dimensions, broken invariant.
struct StructuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A required option or field is missing or has an unusable value.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Request rejected up front (e.g. combinatorial blow-up guard).
struct RefusalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Caller violated a documented precondition.
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Data sources disagree with each other.
struct IntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A probability column carries no mass and cannot be normalized.
struct DegenerateColumnError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Temperature fitting has no usable signal.
struct UnfittableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace trackuq
