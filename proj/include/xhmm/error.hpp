#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace xhmm {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent configuration (tag sets, lexicons, rules, biases).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data that violates a precondition (gold tag outside its class, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// Structural problem in a corpus or config file line.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Sequences of different lengths handed to an evaluation routine.
class AlignmentError : public Error {
 public:
  AlignmentError(std::size_t sentence, const std::string& what)
      : Error("sentence " + std::to_string(sentence) + ": " + what),
        sentence_(sentence) {}
  std::size_t sentence() const { return sentence_; }

 private:
  std::size_t sentence_;
};

// Raised when no tag path has positive probability. `position` is the first
// token at which every state is dead; `sentence` is filled in by corpus-level
// routines.
class ImpossibleSequence : public Error {
 public:
  explicit ImpossibleSequence(std::size_t position,
                              std::optional<std::size_t> sentence = std::nullopt)
      : Error(describe(position, sentence)), position_(position), sentence_(sentence) {}
  std::size_t position() const { return position_; }
  std::optional<std::size_t> sentence() const { return sentence_; }

 private:
  static std::string describe(std::size_t position, std::optional<std::size_t> sentence) {
    std::string s = "impossible sequence: all states dead at position " + std::to_string(position);
    if (sentence) s = "sentence " + std::to_string(*sentence) + ": " + s;
    return s;
  }
  std::size_t position_;
  std::optional<std::size_t> sentence_;
};

class ModelLoadError : public Error {
 public:
  enum class Kind { format, version_mismatch, checksum_failure, tagset_mismatch };
  ModelLoadError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline std::string at_line(std::size_t line, const std::string& msg) {
  return "line " + std::to_string(line) + ": " + msg;
}

}  // namespace xhmm
