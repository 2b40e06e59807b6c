#pragma once
#include <stdexcept>
#include <string>

namespace kam {

// Two failure families. The CLI maps InputError to exit 2 and NumericalError to exit 3.
class KamError : public std::runtime_error {
 public:
  KamError(std::string code, const std::string& msg)
      : std::runtime_error(msg), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

class InputError : public KamError {
 public:
  using KamError::KamError;
};

class NumericalError : public KamError {
 public:
  using KamError::KamError;
};

}  // namespace kam
