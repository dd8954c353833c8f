// Copyright 2026 nfps contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace nfps {

/// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Grid/camera dimension mismatch.
class DimensionError : public Error {
  public:
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

/// Input carries no usable data (empty mask, zero mean, too few pixels).
class DegenerateInputError : public Error {
  public:
    explicit DegenerateInputError(const std::string& msg) : Error(msg) {}
};

/// A light source coincides with a surface point.
class SingularLightError : public Error {
  public:
    explicit SingularLightError(const std::string& msg) : Error(msg) {}
};

/// Iterative solver failed to reach its tolerance within the budget.
class ConvergenceError : public Error {
  public:
    ConvergenceError(const std::string& msg, double residual)
        : Error(msg), residual_(residual) {}
    double residual() const { return residual_; }

  private:
    double residual_;
};

/// Malformed or unreadable data file.
class DataError : public Error {
  public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

}  // namespace nfps
