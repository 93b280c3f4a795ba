// Copyright (c) 2026 fisheyeloc contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fisheyeloc {

/// Error taxonomy shared by the library and the CLI exit codes:
/// validation -> 1, numerical -> 2, io -> 3.
enum class ErrorKind { validation = 1, numerical = 2, io = 3 };

class Error : public std::runtime_error {
 public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

 private:
    ErrorKind kind_;
};

/// Precondition or invariant violated by the caller's inputs.
class ValidationError : public Error {
 public:
    explicit ValidationError(const std::string& message)
        : Error(ErrorKind::validation, message) {}
};

/// Input outside the representable range; carries the largest radial distance
/// the model can produce.
class OutOfRangeError : public ValidationError {
 public:
    OutOfRangeError(const std::string& message, double max_radius)
        : ValidationError(message), max_radius_(max_radius) {}
    double max_radius() const noexcept { return max_radius_; }

 private:
    double max_radius_;
};

/// Floor position cannot be recovered (ray at the horizon guard).
class UnlocalizableError : public ValidationError {
 public:
    using ValidationError::ValidationError;
};

class NumericalError : public Error {
 public:
    explicit NumericalError(const std::string& message)
        : Error(ErrorKind::numerical, message) {}
};

/// Iterative solver hit its cap; carries the best residual reached.
class NonConvergenceError : public NumericalError {
 public:
    NonConvergenceError(const std::string& message, double best_rms)
        : NumericalError(message), best_rms_(best_rms) {}
    double best_rms() const noexcept { return best_rms_; }

 private:
    double best_rms_;
};

class IoError : public Error {
 public:
    explicit IoError(const std::string& message) : Error(ErrorKind::io, message) {}
};

/// Malformed document. line is 1-based; 0 when not line-specific.
class ParseError : public IoError {
 public:
    ParseError(const std::string& source, std::size_t line, const std::string& message)
        : IoError(source + ":" + std::to_string(line) + ": " + message),
          source_(source),
          line_(line) {}
    const std::string& source() const noexcept { return source_; }
    std::size_t line() const noexcept { return line_; }

 private:
    std::string source_;
    std::size_t line_;
};

}  // namespace fisheyeloc
