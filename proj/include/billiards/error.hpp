#pragma once

#include <stdexcept>
#include <string>

namespace billiards {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Rates that must be pairwise distinct are too close for a closed form.
class DegenerateRates : public Error {
 public:
  using Error::Error;
};

// An infinite sequence could not be cut below the requested tolerance.
class TruncationFailure : public Error {
 public:
  using Error::Error;
};

// A convergent series did not reach its tail bound within the term cap.
class NoConvergence : public Error {
 public:
  using Error::Error;
};

// The chain has no positive rate now or later and no pending sign change.
class StuckState : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace billiards
