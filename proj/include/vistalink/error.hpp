#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vistalink {

/// Machine-readable failure categories shared by the engine, CLI and service.
enum class ErrorCode {
  InvalidArgument,
  UnreadableFile,
  UnsupportedFormat,
  ImageTooSmall,
  DegenerateQuad,
  PointAtInfinity,
  EstimationFailed,
  ImageNotFound,
  LinkNotFound,
  ProjectNotFound,
  LinkExists,
  SelfLink,
  BadDate,
  MalformedDocument,
  UnsupportedVersion,
  DanglingReference,
  HomographyInconsistent,
  DuplicateId,
  InvariantViolation,
  JobRunning,
  JobNotFound,
};

/// Stable snake_case name used on the wire ("degenerate_quad", ...).
std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string entity = {})
      : std::runtime_error(message), code_(code), entity_(std::move(entity)) {}

  ErrorCode code() const noexcept { return code_; }
  /// Id of the offending image/link/point set, empty when not applicable.
  const std::string& entity() const noexcept { return entity_; }

 private:
  ErrorCode code_;
  std::string entity_;
};

}  // namespace vistalink
