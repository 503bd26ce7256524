#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace coc {

// Validates instance against the subset of JSON Schema the shipped schemas
// use: type, required, properties, additionalProperties (bool),
// items, enum, const, minimum, maximum, exclusiveMinimum, minItems,
// minLength. Returns one message per violation, each prefixed with the
// JSON pointer of the offending value.
std::vector<std::string> validate_json_schema(const nlohmann::json& schema, const nlohmann::json& instance);

}  // namespace coc
