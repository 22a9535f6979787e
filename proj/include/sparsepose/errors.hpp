// Copyright 2026 The sparsepose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace sparsepose {

// Root of every error raised by the library. The CLI maps the concrete
// subclasses onto its exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unreadable input (bad file, bad JSON/CSV, unknown kind).
class ParseError : public Error {
 public:
  using Error::Error;
};

// File-system failures, always carrying the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InvalidInputError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InvalidParameterError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Geometrically degenerate configurations (coincident points, zero rows).
class DegenerateError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace sparsepose
