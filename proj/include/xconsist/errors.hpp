#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace xconsist {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input or a violated data invariant. Carries every diagnostic
// found, not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> diagnostics);
  ValidationError(const std::string& diagnostic)
      : ValidationError(std::vector<std::string>{diagnostic}) {}

  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

// Non-finite values produced by a computation (e.g. training divergence).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace xconsist
