#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sphcov {

// Bad arguments: parameters outside a family's admissible set, empty inputs,
// mismatched metrics, out-of-range distances.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A covariance matrix that could not be factorized even after the largest jitter.
class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Design or dataset cannot satisfy a sampling request.
class DesignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Config or data file problem. `path` is a JSON pointer (or "line N" for CSV).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace sphcov
