#pragma once

#include <cstdint>
#include <exception>
#include <stdexcept>
#include <string>

namespace flowlhd {

// Root of every error raised by the library. The CLI maps subclasses onto
// process exit codes (see exit_code_for).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// A stateful block was used out of order (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

class NumericsError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A checkpoint's architecture does not match what the caller asked for.
class ArchMismatch : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class DataError : public Error {
 public:
  using Error::Error;
};

// FLD is undefined for non-negative mean log-likelihoods.
class DomainError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), message_(what), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string message_;
  std::uint64_t offset_;
};

// 0 success, 1 internal/numerics failure, 2 usage/config/data/format error.
int exit_code_for(const std::exception& e) noexcept;

}  // namespace flowlhd
