#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace loggas {

enum class ErrorKind {
  domain,         // argument outside the mathematical domain (diagonal of a singular kernel, eps <= 0)
  configuration,  // invalid parameters, budgets exceeded
  unsupported,    // valid request the chosen representation cannot serve
  estimation,     // Monte Carlo estimator could not produce an honest value
  convergence,    // iterative solver hit its iteration cap
  integration,    // time stepper produced a non-finite state
  tuning,         // sampler step-size adaptation failed
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) raise(kind, message);
}

}  // namespace loggas
