#pragma once

#include <stdexcept>
#include <string>

namespace dnsde {

// An iterative solve exhausted its iteration budget.
struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operands live on different meshes.
struct MeshMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A vector length does not match the mesh it claims to live on.
struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A graph or coefficient set falls outside the assumptions the scheme needs.
struct HypothesisViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Config file rejected; carries the offending line and key when known.
struct ParseError : std::runtime_error {
  ParseError(int line_, std::string key_, const std::string& what_)
      : std::runtime_error("line " + std::to_string(line_) + ", key '" + key_ +
                           "': " + what_),
        line(line_),
        key(std::move(key_)) {}
  int line;
  std::string key;
};

// Config parsed but semantically invalid; carries the offending field when
// the failure is tied to one.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
  ValidationError(std::string field_, const std::string& reason)
      : std::runtime_error(field_ + ": " + reason), field(std::move(field_)) {}
  std::string field;
};

// Two runs cannot share one noise record: step ratio is not an integer.
struct IncompatibleSteps : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dnsde
