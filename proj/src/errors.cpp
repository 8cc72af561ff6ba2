#include "loggas/errors.hpp"

namespace loggas {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return "domain error";
    case ErrorKind::configuration: return "configuration error";
    case ErrorKind::unsupported: return "unsupported configuration";
    case ErrorKind::estimation: return "estimation error";
    case ErrorKind::convergence: return "convergence error";
    case ErrorKind::integration: return "integration error";
    case ErrorKind::tuning: return "tuning error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void raise(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace loggas
