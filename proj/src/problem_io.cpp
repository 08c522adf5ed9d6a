#include "gppa/problem_io.hpp"

#include "gppa/csv.hpp"
#include "json_support.hpp"

#include <cstring>
#include <set>

namespace gppa {

namespace detail {

json parse_json_text(std::string_view text, std::string_view source) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError(std::string(source) + ": line " + std::to_string(line) + ", column " +
                     std::to_string(column) + ": malformed JSON");
  }
}

double number_field(const json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError("field '" + path + "': expected a number");
  return j.get<double>();
}

Vector vector_field(const json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError("field '" + path + "': expected an array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Index>(i)) = number_field(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

Matrix matrix_field(const json& j, const std::string& path) {
  if (!j.is_object()) {
    throw ParseError("field '" + path + "': expected an object with rows, cols, data");
  }
  for (const auto& [key, _] : j.items()) {
    if (key != "rows" && key != "cols" && key != "data") {
      throw ParseError("field '" + path + "." + key + "': unknown key");
    }
  }
  const auto dim = [&](const char* key) -> Index {
    if (!j.contains(key) || !j[key].is_number_unsigned()) {
      throw ParseError("field '" + path + "." + key + "': expected a nonnegative integer");
    }
    return static_cast<Index>(j[key].get<std::uint64_t>());
  };
  const Index rows = dim("rows");
  const Index cols = dim("cols");
  if (!j.contains("data")) throw ParseError("field '" + path + ".data': missing");
  const Vector data = vector_field(j["data"], path + ".data");
  if (data.size() != rows * cols) {
    throw ParseError("field '" + path + ".data': expected " + std::to_string(rows * cols) +
                     " numbers for " + std::to_string(rows) + "x" + std::to_string(cols) +
                     ", got " + std::to_string(data.size()));
  }
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = data(r * cols + c);
  return m;
}

namespace {

void require_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw ParseError("field '" + (path.empty() ? key : path + "." + key) + "': unknown key");
    }
  }
  for (const auto& key : allowed) {
    if (!j.contains(key)) {
      throw ParseError("field '" + (path.empty() ? key : path + "." + key) + "': missing");
    }
  }
}

std::string sub(const std::string& path, const char* key) {
  return path.empty() ? key : path + "." + key;
}

}  // namespace

Problem problem_from_json_value(const json& j, const std::string& path) {
  if (!j.is_object()) throw ParseError("field '" + path + "': expected an object");
  if (!j.contains("type") || !j["type"].is_string()) {
    throw ParseError("field '" + sub(path, "type") + "': expected a string");
  }
  const auto type = j["type"].get<std::string>();
  if (type == "linearly_constrained_qp") {
    require_keys(j, path, {"type", "Q", "q", "A", "b"});
    LinearlyConstrainedQP p;
    p.Q = matrix_field(j["Q"], sub(path, "Q"));
    p.q = vector_field(j["q"], sub(path, "q"));
    p.A = matrix_field(j["A"], sub(path, "A"));
    p.b = vector_field(j["b"], sub(path, "b"));
    return p;
  }
  if (type == "separable_qp") {
    require_keys(j, path, {"type", "Q_f", "q_f", "Q_g", "q_g", "M", "lambda"});
    SeparableQP p;
    p.Q_f = matrix_field(j["Q_f"], sub(path, "Q_f"));
    p.q_f = vector_field(j["q_f"], sub(path, "q_f"));
    p.Q_g = matrix_field(j["Q_g"], sub(path, "Q_g"));
    p.q_g = vector_field(j["q_g"], sub(path, "q_g"));
    p.M = matrix_field(j["M"], sub(path, "M"));
    p.lambda = number_field(j["lambda"], sub(path, "lambda"));
    return p;
  }
  throw ParseError("field '" + sub(path, "type") + "': expected 'linearly_constrained_qp' or " +
                   "'separable_qp', got '" + type + "'");
}

}  // namespace detail

namespace {

// "-0" would come back from the JSON reader as the integer 0, so integral
// values keep a fractional part.
std::string json_number(double v) {
  std::string s = csv::format_double(v);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

void put_vector(std::string& out, const Vector& v) {
  out += '[';
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += json_number(v(i));
  }
  out += ']';
}

void put_matrix(std::string& out, const Matrix& m) {
  out += "{\"rows\": " + std::to_string(m.rows()) + ", \"cols\": " + std::to_string(m.cols()) +
         ", \"data\": [";
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (r || c) out += ", ";
      out += json_number(m(r, c));
    }
  }
  out += "]}";
}

template <class T>
bool same_bits(const T& a, const T& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

std::string_view problem_type_name(const Problem& problem) {
  return std::holds_alternative<LinearlyConstrainedQP>(problem) ? "linearly_constrained_qp"
                                                                : "separable_qp";
}

std::string problem_to_json(const Problem& problem) {
  std::string out = "{\n  \"type\": \"" + std::string(problem_type_name(problem)) + "\"";
  const auto field = [&](const char* name) { out += ",\n  \"" + std::string(name) + "\": "; };
  if (const auto* p = std::get_if<LinearlyConstrainedQP>(&problem)) {
    p->validate();
    field("Q"), put_matrix(out, p->Q);
    field("q"), put_vector(out, p->q);
    field("A"), put_matrix(out, p->A);
    field("b"), put_vector(out, p->b);
  } else {
    const auto& s = std::get<SeparableQP>(problem);
    s.validate();
    field("Q_f"), put_matrix(out, s.Q_f);
    field("q_f"), put_vector(out, s.q_f);
    field("Q_g"), put_matrix(out, s.Q_g);
    field("q_g"), put_vector(out, s.q_g);
    field("M"), put_matrix(out, s.M);
    field("lambda"), out += json_number(s.lambda);
  }
  out += "\n}\n";
  return out;
}

Problem problem_from_json(std::string_view text) {
  return detail::problem_from_json_value(detail::parse_json_text(text, "problem"), "");
}

void emit_problem_file(const Problem& problem, const std::filesystem::path& path) {
  write_text_file(path, problem_to_json(problem));
}

Problem load_problem_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return detail::problem_from_json_value(detail::parse_json_text(text, path.string()), "");
  } catch (const ParseError& e) {
    const std::string what = e.what();
    if (what.rfind(path.string(), 0) == 0) throw;
    throw ParseError(path.string() + ": " + what);
  }
}

bool identical(const Problem& lhs, const Problem& rhs) {
  if (lhs.index() != rhs.index()) return false;
  if (const auto* a = std::get_if<LinearlyConstrainedQP>(&lhs)) {
    const auto& b = std::get<LinearlyConstrainedQP>(rhs);
    return same_bits(a->Q, b.Q) && same_bits(a->q, b.q) && same_bits(a->A, b.A) &&
           same_bits(a->b, b.b);
  }
  const auto& a = std::get<SeparableQP>(lhs);
  const auto& b = std::get<SeparableQP>(rhs);
  return same_bits(a.Q_f, b.Q_f) && same_bits(a.q_f, b.q_f) && same_bits(a.Q_g, b.Q_g) &&
         same_bits(a.q_g, b.q_g) && same_bits(a.M, b.M) &&
         std::memcmp(&a.lambda, &b.lambda, sizeof(double)) == 0;
}

}  // namespace gppa
