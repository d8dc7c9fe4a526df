#pragma once

#include <stdexcept>
#include <string>

namespace gdiff {

/// Invalid argument, bound, or dimension mismatch.
class ParameterError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A matrix that must be (semi)definite or invertible is not.
class SingularityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A recursion or simulation diverged; carries the model name and timestep.
class InstabilityError : public std::runtime_error {
public:
  InstabilityError(const std::string& model, int t)
      : std::runtime_error("numerical instability in model '" + model +
                           "' at t=" + std::to_string(t)),
        model_(model), t_(t) {}
  const std::string& model() const { return model_; }
  int t() const { return t_; }

private:
  std::string model_;
  int t_;
};

/// File could not be read, parsed, or written.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace gdiff
