#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace smartfl {

// Bad arguments to a library call (length mismatch, empty input, NaN ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed binary input. `offset` is the byte offset where parsing failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Experiment configuration that cannot be realized.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A strategy or attack whose preconditions do not hold for the current round.
class InapplicableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss encountered during optimization.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace smartfl
