#pragma once

#include <stdexcept>
#include <utility>
#include <string>

namespace strandrecon {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters or configuration keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or missing input data (files, bundles, empty inputs).
class DataError : public Error {
 public:
  using Error::Error;
};

class OutOfFrustumError : public Error {
 public:
  using Error::Error;
};

class InvalidDepthError : public Error {
 public:
  using Error::Error;
};

// A pipeline stage could not produce output.
class PipelineError : public Error {
 public:
  PipelineError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace strandrecon
