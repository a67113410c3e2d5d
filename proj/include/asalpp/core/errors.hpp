#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace asalpp {

/// Invalid configuration or malformed input (wrong theta length, unknown
/// config key, bad checkpoint list, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Remote provider failure after all retries. Carries the endpoint and the
/// last HTTP status (0 when the transport itself failed).
class ProviderError : public std::runtime_error {
 public:
  ProviderError(std::string endpoint, int status, const std::string& what)
      : std::runtime_error(what), endpoint_(std::move(endpoint)), status_(status) {}

  const std::string& endpoint() const { return endpoint_; }
  int status() const { return status_; }

 private:
  std::string endpoint_;
  int status_;
};

/// Non-finite activation produced during a simulation step.
class NumericFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem / serialization failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tree documents that are not a single rooted tree (orphans, cycles).
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace asalpp
