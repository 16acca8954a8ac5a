// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gnvp {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible for an op; the message names the op and both shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A NaN/Inf appeared, or an iterative numeric step failed.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Bad argument values (out-of-range hyperparameters, non-bijective permutations, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data: corrupted graphs, bad dataset lines,
/// checkpoint problems.
class DataError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public DataError {
 public:
  enum class Kind { kIo, kBadMagic, kVersionMismatch, kSpecMismatch, kTruncated, kChecksum, kMissingTensor };

  CheckpointError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace gnvp
