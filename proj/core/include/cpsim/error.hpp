#pragma once

#include <stdexcept>
#include <string>

namespace cpsim {

// Invalid configuration value. `field()` is the dotted path of the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& reason)
      : std::runtime_error(field + ": " + reason), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Mathematical precondition violated (non-SPD covariance, negative time step, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Filesystem failure with the path that caused it.
class IoError : public std::runtime_error {
 public:
  IoError(std::string path, const std::string& reason)
      : std::runtime_error(path + ": " + reason), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace cpsim
