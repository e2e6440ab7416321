// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace noisediff {

/// Precondition or configuration violation. The CLI maps it to exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Shape disagreement between tensor operands.
class ShapeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Non-finite values or divergence during a computation. The CLI maps it to exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure while reading or writing a serialized artifact.
class FormatError : public std::runtime_error {
public:
    enum class Kind { io, bad_magic, unsupported_version, truncated_payload, bad_header, non_finite };

    FormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

}  // namespace noisediff
