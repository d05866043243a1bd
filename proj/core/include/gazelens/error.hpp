#pragma once

#include <stdexcept>
#include <string>

namespace gazelens {

/// Base exception for every failure raised by the library. Carries the name of
/// the module that detected the problem so CLI diagnostics can say where it
/// came from.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& message)
      : std::runtime_error(module + ": " + message), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

}  // namespace gazelens
