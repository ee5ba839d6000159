#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace proxyforge {

/// Base for every domain error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NormalizationError : public Error {
 public:
  using Error::Error;
};

/// A class in a minibatch has fewer than two instances.
class DegenerateClassError : public Error {
 public:
  using Error::Error;
};

/// A log-sum-exp denominator would range over an empty set.
class EmptyDenominatorError : public Error {
 public:
  using Error::Error;
};

class NoTripletError : public Error {
 public:
  using Error::Error;
};

class SamplerError : public Error {
 public:
  using Error::Error;
};

class TrialTooShortError : public Error {
 public:
  using Error::Error;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

class ProbeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(std::size_t epoch, const std::string& what)
      : Error(what), epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

}  // namespace proxyforge
