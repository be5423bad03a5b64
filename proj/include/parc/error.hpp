#pragma once

#include <stdexcept>
#include <string>

namespace parc {

// Error categories double as the CLI exit codes.
enum class ErrorKind : int {
  kConfig = 2,
  kData = 3,
  kBackend = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

/// Bad configuration: unknown names, invalid task specs, bad CLI arguments.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

/// Malformed or inconsistent input data (corpora, index files, profiles, scores).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

/// Scorer backend failures: transport, protocol violations, fixture misses.
class BackendError : public Error {
 public:
  explicit BackendError(const std::string& what) : Error(ErrorKind::kBackend, what) {}
};

}  // namespace parc
