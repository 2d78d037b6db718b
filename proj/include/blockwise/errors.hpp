// Copyright 2026 The blockwise Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace blockwise {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text: config files, CSV rows, count literals.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that violates a type invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Arena or buffer request beyond the configured memory cap.
class SizingError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation (log of 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Cost-model denominator too close to zero.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Optimizer failure (non-finite gradient).
class FitError : public Error {
 public:
  using Error::Error;
};

/// API misuse, e.g. submitting work to a pool that was shut down.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace blockwise
