#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace shiftbench {

// Broad failure classes; the CLI maps them onto exit codes 2, 3 and 4.
enum class ErrorKind { validation, io, coverage };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

// Predictions do not cover every sample that has to be scored.
class CoverageError : public Error {
 public:
  explicit CoverageError(std::vector<std::string> missing, const std::string& context = {})
      : Error(ErrorKind::coverage, (context.empty() ? "" : context + ": ") + format(missing)),
        missing_(std::move(missing)) {}
  const std::vector<std::string>& missing_ids() const noexcept { return missing_; }

 private:
  static std::string format(const std::vector<std::string>& ids) {
    std::string out = "predictions missing " + std::to_string(ids.size()) + " sample id(s):";
    for (const auto& id : ids) out += " " + id;
    return out;
  }
  std::vector<std::string> missing_;
};

// A shift scenario boosts a class that has no samples in the base distribution.
class DegenerateScenarioError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Resampling without replacement asks for more samples than a class holds.
class CapacityError : public ValidationError {
 public:
  CapacityError(std::string class_name, const std::string& what)
      : ValidationError(what), class_name_(std::move(class_name)) {}
  const std::string& class_name() const noexcept { return class_name_; }

 private:
  std::string class_name_;
};

// Cosine similarity with a zero-norm operand.
class UndefinedSimilarityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UnscorableSampleError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyOracleError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace shiftbench
