#include <gtest/gtest.h>

#include "coc/json_schema.hpp"

namespace coc {
namespace {

using nlohmann::json;

const json kSchema = json::parse(R"({
  "type": "object",
  "required": ["name", "count", "tags"],
  "additionalProperties": false,
  "properties": {
    "name": {"type": "string", "minLength": 1},
    "count": {"type": "integer", "minimum": 0, "maximum": 10},
    "ratio": {"type": "number", "exclusiveMinimum": 0},
    "kind": {"enum": ["a", "b"]},
    "version": {"const": 2},
    "tags": {"type": "array", "minItems": 1, "items": {"type": "string"}}
  }
})");

TEST(JsonSchema, AcceptsConformingInstance) {
    const json ok{{"name", "x"}, {"count", 3}, {"ratio", 0.5}, {"kind", "a"}, {"version", 2}, {"tags", {"t"}}};
    EXPECT_TRUE(validate_json_schema(kSchema, ok).empty());
}

TEST(JsonSchema, ReportsEachViolationWithPointer) {
    const json bad{{"name", ""}, {"count", 11}, {"ratio", 0}, {"kind", "c"}, {"version", 3}, {"tags", {1}},
                   {"extra", true}};
    const auto errors = validate_json_schema(kSchema, bad);
    EXPECT_EQ(errors.size(), 7u);
    auto mentions = [&](const std::string& pointer) {
        return std::any_of(errors.begin(), errors.end(),
                           [&](const std::string& e) { return e.rfind(pointer, 0) == 0; });
    };
    EXPECT_TRUE(mentions("/name"));
    EXPECT_TRUE(mentions("/count"));
    EXPECT_TRUE(mentions("/ratio"));
    EXPECT_TRUE(mentions("/kind"));
    EXPECT_TRUE(mentions("/version"));
    EXPECT_TRUE(mentions("/tags/0"));
}

TEST(JsonSchema, MissingRequiredAndWrongTypes) {
    EXPECT_EQ(validate_json_schema(kSchema, json{{"name", "x"}}).size(), 2u);
    EXPECT_EQ(validate_json_schema(kSchema, json::array()).size(), 1u);
    EXPECT_FALSE(validate_json_schema(kSchema, json{{"name", "x"}, {"count", 1.5}, {"tags", {"t"}}}).empty());
    EXPECT_FALSE(validate_json_schema(kSchema, json{{"name", "x"}, {"count", 1}, {"tags", json::array()}}).empty());
}

TEST(JsonSchema, IntegerIsANumber) {
    const json schema{{"type", "number"}};
    EXPECT_TRUE(validate_json_schema(schema, 3).empty());
    EXPECT_TRUE(validate_json_schema(schema, 3.5).empty());
    EXPECT_FALSE(validate_json_schema(schema, "3").empty());
}

}  // namespace
}  // namespace coc
