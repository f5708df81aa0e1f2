#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace skillforge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class LoadError : public Error {
 public:
  LoadError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Raised when a caller breaks an operation's precondition.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace skillforge
