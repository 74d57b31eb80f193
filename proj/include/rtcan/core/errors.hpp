// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rtcan {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid or inconsistent configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tensor/image dimension mismatches.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Dataset layout, decoding or record problems.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Filesystem and encoding failures.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Invalid numeric inputs to losses/metrics.
class ValueError : public Error {
 public:
  using Error::Error;
};

/// Training aborted (e.g. non-finite loss). Carries the offending batch ids.
class TrainError : public Error {
 public:
  TrainError(const std::string& msg, std::vector<std::string> batch_ids = {})
      : Error(msg), batch_ids_(std::move(batch_ids)) {}
  const std::vector<std::string>& batch_ids() const { return batch_ids_; }

 private:
  std::vector<std::string> batch_ids_;
};

}  // namespace rtcan
