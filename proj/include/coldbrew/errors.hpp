#pragma once

#include <stdexcept>
#include <string>

namespace coldbrew {

/// Invalid input data or configuration (bad file, bad dimensions, bad flag).
class InvalidInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A training run produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int epoch)
      : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ")"),
        epoch_(epoch) {}

  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

/// FCR is undefined for the given submodule scores.
class DegenerateFcr : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace coldbrew
