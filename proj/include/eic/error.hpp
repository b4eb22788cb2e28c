#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace eic {

// Base exception for every failure raised by the library. `code` is a short
// stable identifier ("schema", "reference", "scorer", ...) that the CLI prints
// as the machine-parsable part of its error line.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace eic
