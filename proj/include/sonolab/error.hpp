#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sonolab {

enum class ErrorKind {
  io,                // missing file, unreadable path, refused overwrite
  format,            // not a container, missing groups
  schema,            // shapes inconsistent with probe/scan
  key,               // unknown dataset key
  bounds,            // index out of range
  parameter,         // invalid or missing parameter value
  invalid_scan,      // Scan / Probe invariants violated
  degenerate_input,  // e.g. normalizing an all-zero frame
  config,            // malformed config file or pipeline wiring
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library. The kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

  /// Same kind, message prefixed with `context: `.
  Error with_context(std::string_view context) const;

 private:
  ErrorKind kind_;
};

}  // namespace sonolab
