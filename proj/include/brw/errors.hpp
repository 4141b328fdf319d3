#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace brw {

/// Base for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Illegal model or experiment configuration. `parameter()` names the offender.
class ConfigError : public Error {
 public:
  ConfigError(std::string parameter, const std::string& what);
  const std::string& parameter() const noexcept { return parameter_; }

 private:
  std::string parameter_;
};

/// m(theta) is infinite or non-positive: lambda lies outside the strip of
/// absolute convergence.
class OutOfStripError : public Error {
 public:
  using Error::Error;
};

/// An operation was called outside its hypotheses (e.g. p >= alpha for the
/// stable-sum oracle, theta' = 0 for the growth-rate check).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A generation would exceed SimConfig::max_population.
class PopulationCapError : public Error {
 public:
  PopulationCapError(int generation, std::uint64_t population, std::uint64_t cap);
  int generation() const noexcept { return generation_; }
  std::uint64_t population() const noexcept { return population_; }

 private:
  int generation_;
  std::uint64_t population_;
};

/// A simulation was requested at a lambda with m(lambda) = 0.
class CaseThreeError : public Error {
 public:
  using Error::Error;
};

/// Numerical procedure failed its own resolution check.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

}  // namespace brw
