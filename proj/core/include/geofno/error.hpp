// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace geofno {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GEOFNO_DEFINE_ERROR(Name)          \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

GEOFNO_DEFINE_ERROR(DimensionError);
GEOFNO_DEFINE_ERROR(DtypeError);
GEOFNO_DEFINE_ERROR(NumericError);
GEOFNO_DEFINE_ERROR(EvaluationError);
GEOFNO_DEFINE_ERROR(KindError);
GEOFNO_DEFINE_ERROR(ConditioningError);
GEOFNO_DEFINE_ERROR(DomainError);
GEOFNO_DEFINE_ERROR(GeometryError);
GEOFNO_DEFINE_ERROR(WeightError);
GEOFNO_DEFINE_ERROR(SamplingError);
GEOFNO_DEFINE_ERROR(ConfigError);
GEOFNO_DEFINE_ERROR(DegenerateTargetError);
GEOFNO_DEFINE_ERROR(SolverError);
GEOFNO_DEFINE_ERROR(TapeError);

#undef GEOFNO_DEFINE_ERROR

/// Raised when the loss turns non-finite or explodes during training.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::int64_t iteration)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"), iteration_(iteration) {}
  std::int64_t iteration() const noexcept { return iteration_; }

 private:
  std::int64_t iteration_;
};

/// Malformed or truncated persisted data. `offset` is the byte position at
/// which decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// A persisted artifact was written by an incompatible format version.
class VersionError : public Error {
 public:
  VersionError(std::uint32_t found, std::uint32_t expected)
      : Error("format version " + std::to_string(found) + " is not supported (expected " +
              std::to_string(expected) + "); upgrade required"),
        found_(found) {}
  std::uint32_t found() const noexcept { return found_; }

 private:
  std::uint32_t found_;
};

}  // namespace geofno
