#pragma once

#include <string>
#include <string_view>

#include "json.hpp"

#include "agvsched/scenario.hpp"

namespace agvsched {

using Json = nlohmann::ordered_json;

// Reads a scenario document. Missing keys keep their defaults; unknown keys and values
// outside their range throw Error{config_invalid} naming the dotted field.
ScenarioConfig config_from_json(const Json& doc);
Json to_json(const ScenarioConfig& config);

// Throws Error{io_error | config_invalid}.
ScenarioConfig load_config(const std::string& path);
Json load_json(const std::string& path);

// Sets a dotted key, e.g. "channel.D=25". The value is parsed as JSON when possible and
// kept as a string otherwise. Throws Error{config_invalid} for a malformed assignment.
void apply_override(Json& doc, std::string_view assignment);
void set_path(Json& doc, std::string_view dotted, const Json& value);

}  // namespace agvsched
