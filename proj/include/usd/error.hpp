// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace usd {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not conform to an op's rules.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A caller passed a value outside an operation's domain (bad id, bad token).
class InputError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or hyperparameters. Maps to CLI exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// API used out of order, e.g. backward on a node the graph never produced.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Cross-record consistency violated (exposure without context, etc).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed text input. Carries the 1-based line number and field name.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& field,
             const std::string& detail)
      : Error(source + ":" + std::to_string(line) + ": field '" + field + "': " + detail),
        line_(line),
        field_(field) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

// Checkpoint header or layout does not match the expected version.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace usd
