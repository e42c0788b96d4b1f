#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fenrich {

// Base for every failure raised by the library. The CLI maps the subclasses
// onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition or invalid data (exit code 1).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A required upstream artifact is absent (exit code 2).
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

// An upstream artifact does not match the hash recorded in the manifest
// (exit code 3).
class HashMismatchError : public Error {
 public:
  using Error::Error;
};

// Malformed input record, tagged with its 1-based line number.
class RecordError : public DomainError {
 public:
  RecordError(std::size_t line, const std::string& what)
      : DomainError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace fenrich
