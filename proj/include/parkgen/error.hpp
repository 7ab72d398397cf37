#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace parkgen {

// Process exit codes used by the CLI.
enum class ExitCode : int { ok = 0, config = 2, data = 3, numeric = 4 };

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Malformed or inconsistent input data: wrong shapes, unknown class ids,
/// images smaller than a tile, and similar contract violations.
class StructuralError : public Error {
 public:
  explicit StructuralError(const std::string& what) : Error(ExitCode::data, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ExitCode::config, what) {}
};

/// Non-finite loss or parameter during optimization.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ExitCode::numeric, what) {}
};

class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& what) : Error(ExitCode::data, what) {}
};

class VersionError : public Error {
 public:
  explicit VersionError(const std::string& what) : Error(ExitCode::data, what) {}
};

namespace detail {

template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream oss;
  (oss << ... << std::forward<Args>(args));
  return oss.str();
}

}  // namespace detail

/// Rethrows `e` with a new message, keeping its concrete type.
[[noreturn]] inline void rethrow_as(const Error& e, const std::string& what) {
  if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(what);
  if (dynamic_cast<const NumericError*>(&e)) throw NumericError(what);
  if (dynamic_cast<const IntegrityError*>(&e)) throw IntegrityError(what);
  if (dynamic_cast<const VersionError*>(&e)) throw VersionError(what);
  if (dynamic_cast<const StructuralError*>(&e)) throw StructuralError(what);
  throw Error(e.code(), what);
}

template <typename E = StructuralError, typename... Args>
[[noreturn]] void fail(Args&&... args) {
  throw E(detail::concat(std::forward<Args>(args)...));
}

template <typename E = StructuralError, typename... Args>
void require(bool cond, Args&&... args) {
  if (!cond) fail<E>(std::forward<Args>(args)...);
}

}  // namespace parkgen
