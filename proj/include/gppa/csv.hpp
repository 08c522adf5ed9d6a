#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gppa::csv {

/// 17 significant digits, shortest exponent form; "nan", "inf", "-inf" for
/// non-finite values. Parsing the text back gives the same double.
std::string format_double(double value);

/// Inverse of format_double. Empty text is an absent value.
std::optional<double> parse_double(std::string_view text);

/// Comma separated, LF terminated. Cells are plain numbers or identifiers,
/// so no quoting is performed; cells containing ',' or '\n' are rejected.
class Writer {
 public:
  explicit Writer(std::vector<std::string> header);

  void add_row(const std::vector<std::string>& cells);
  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_; }
  const std::string& str() const { return text_; }

 private:
  std::vector<std::string> header_;
  std::string text_;
  std::size_t rows_ = 0;
};

inline std::string cell(double v) { return format_double(v); }
inline std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws InvalidArgument if absent.
  std::size_t column(std::string_view name) const;
};

Table parse(std::string_view text);
Table read_file(const std::filesystem::path& path);

}  // namespace gppa::csv
