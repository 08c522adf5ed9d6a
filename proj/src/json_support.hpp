#pragma once

#include "gppa/problem_io.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>

namespace gppa::detail {

using json = nlohmann::json;

/// Parses text, turning syntax errors into ParseError with line and column.
json parse_json_text(std::string_view text, std::string_view source);

double number_field(const json& j, const std::string& path);
Vector vector_field(const json& j, const std::string& path);
Matrix matrix_field(const json& j, const std::string& path);

/// Problem from an already parsed object; `path` prefixes field names in errors.
Problem problem_from_json_value(const json& j, const std::string& path);

}  // namespace gppa::detail
