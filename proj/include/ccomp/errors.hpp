#pragma once

#include <stdexcept>
#include <string>

namespace ccomp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Raised when a model function is evaluated outside its physical domain
/// (e.g. plenum pressure below ambient).
class DomainError : public Error {
 public:
  using Error::Error;
};

class MapRangeError : public Error {
 public:
  enum class Kind { BelowSurge, AboveChoke, GuideVaneRange };

  MapRangeError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class UnreachableTarget : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace ccomp
