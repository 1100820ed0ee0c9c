#include "vistalink/error.hpp"

namespace vistalink {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::UnreadableFile: return "unreadable_file";
    case ErrorCode::UnsupportedFormat: return "unsupported_format";
    case ErrorCode::ImageTooSmall: return "image_too_small";
    case ErrorCode::DegenerateQuad: return "degenerate_quad";
    case ErrorCode::PointAtInfinity: return "point_at_infinity";
    case ErrorCode::EstimationFailed: return "estimation_failed";
    case ErrorCode::ImageNotFound: return "image_not_found";
    case ErrorCode::LinkNotFound: return "link_not_found";
    case ErrorCode::ProjectNotFound: return "project_not_found";
    case ErrorCode::LinkExists: return "link_exists";
    case ErrorCode::SelfLink: return "self_link";
    case ErrorCode::BadDate: return "bad_date";
    case ErrorCode::MalformedDocument: return "malformed_document";
    case ErrorCode::UnsupportedVersion: return "unsupported_version";
    case ErrorCode::DanglingReference: return "dangling_reference";
    case ErrorCode::HomographyInconsistent: return "homography_inconsistent";
    case ErrorCode::DuplicateId: return "duplicate_id";
    case ErrorCode::InvariantViolation: return "invariant_violation";
    case ErrorCode::JobRunning: return "job_running";
    case ErrorCode::JobNotFound: return "job_not_found";
  }
  return "unknown";
}

}  // namespace vistalink
