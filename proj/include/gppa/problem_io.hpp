#pragma once

#include "gppa/admm.hpp"
#include "gppa/alm.hpp"
#include "gppa/io.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

namespace gppa {

using Problem = std::variant<LinearlyConstrainedQP, SeparableQP>;

/// Malformed problem or config document. The message names the line and
/// column for syntax errors and the dotted field path for content errors.
class ParseError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

std::string_view problem_type_name(const Problem& problem);

/// JSON text. Matrices are {"rows": r, "cols": c, "data": [row-major]} and
/// every number is written with 17 significant digits, so loading the text
/// back reproduces each double bit for bit.
std::string problem_to_json(const Problem& problem);
Problem problem_from_json(std::string_view text);

void emit_problem_file(const Problem& problem, const std::filesystem::path& path);
Problem load_problem_file(const std::filesystem::path& path);

/// Bitwise equality of all problem data.
bool identical(const Problem& lhs, const Problem& rhs);

}  // namespace gppa
