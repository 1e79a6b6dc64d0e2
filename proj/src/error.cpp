#include "sonolab/error.hpp"

namespace sonolab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::format: return "format";
    case ErrorKind::schema: return "schema";
    case ErrorKind::key: return "key";
    case ErrorKind::bounds: return "bounds";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::invalid_scan: return "invalid-scan";
    case ErrorKind::degenerate_input: return "degenerate-input";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

Error Error::with_context(std::string_view context) const {
  std::string msg(context);
  msg += ": ";
  msg += what();
  return Error(kind_, msg);
}

}  // namespace sonolab
