#pragma once

#include <stdexcept>
#include <string>

namespace landver {

// Violation of an operation precondition (dimension mismatch, bad argument).
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A projected point lies at or behind the camera plane.
struct BehindCameraError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A projection denominator is not strictly positive.
struct NonPositiveDepthError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The closed-form inverse of the pixel-plane coordinate change is singular here.
struct DegenerateInverseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file; carries a 1-based line number.
struct ParseError : std::runtime_error {
    int line;
    ParseError(int line_, const std::string& what_)
        : std::runtime_error("line " + std::to_string(line_) + ": " + what_), line(line_) {}
};

// Structurally well-formed input that violates a semantic invariant.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad or inconsistent configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace landver
