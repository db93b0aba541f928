#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace caged {

/// Malformed input file; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Optimization produced non-finite values (loss, gradient, or weights).
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, long epoch)
      : std::runtime_error(what), epoch_(epoch) {}
  long epoch() const { return epoch_; }

 private:
  long epoch_;
};

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace caged
