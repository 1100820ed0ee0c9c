#pragma once

#include <string>

#include <json.hpp>

#include "vistalink/matching.hpp"
#include "vistalink/project.hpp"

namespace vistalink {

nlohmann::json to_json(const ImageRecord& record);
/// Same shape as an entry of the interchange "links" array.
nlohmann::json to_json(const Link& link);
nlohmann::json to_json(const Group& group);
nlohmann::json to_json(const VerifiedPair& pair);

/// Parses [[x, y] x 4]; throws MalformedDocument naming `name`.
Quad quad_from_json(const nlohmann::json& value, const std::string& name);

/// Sorted keys, 2-space indent, scalar arrays inline, shortest round-trip doubles.
std::string canonical_dump(const nlohmann::json& value);

}  // namespace vistalink
