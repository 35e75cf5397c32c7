// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace npc {

/// Base class for all npconv errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Batch offset vector is not monotone, does not start at 0, or does not end at N.
class OffsetError : public Error {
 public:
  using Error::Error;
};

/// A coordinate, feature, or weight value is NaN or infinite.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Tensor or cloud dimensions are inconsistent with each other or invalid.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Search radius is not strictly positive.
class RadiusError : public Error {
 public:
  using Error::Error;
};

/// Voxel edge length is not strictly positive.
class VoxelError : public Error {
 public:
  using Error::Error;
};

/// A triplet index is outside [0, N_out) x [0, N_in) x [0, K).
class IndexError : public Error {
 public:
  using Error::Error;
};

/// A closed-form model was evaluated outside its domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An operation was called in an invalid order (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

/// File could not be read, written, or parsed.
class IOError : public Error {
 public:
  using Error::Error;
};

}  // namespace npc
