#include "gppa/csv.hpp"

#include "gppa/io.hpp"
#include "gppa/types.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>

namespace gppa::csv {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (text == "nan") return std::nan("");
  if (text == "inf") return HUGE_VAL;
  if (text == "-inf") return -HUGE_VAL;
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw InvalidArgument("not a number: '" + std::string(text) + "'");
  }
  return value;
}

namespace {

void append_line(std::string& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].find_first_of(",\n\r") != std::string::npos) {
      throw InvalidArgument("CSV cell contains a separator: '" + cells[i] + "'");
    }
    if (i) out += ',';
    out += cells[i];
  }
  out += '\n';
}

}  // namespace

Writer::Writer(std::vector<std::string> header) : header_(std::move(header)) {
  append_line(text_, header_);
}

void Writer::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != header_.size()) {
    throw InvalidArgument("CSV row has " + std::to_string(cells.size()) + " cells, header has " +
                          std::to_string(header_.size()));
  }
  append_line(text_, cells);
  ++rows_;
}

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw InvalidArgument("CSV has no column '" + std::string(name) + "'");
}

Table parse(std::string_view text) {
  Table table;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.emplace_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (line_no == 1) {
      table.header = std::move(cells);
    } else {
      if (cells.size() != table.header.size()) {
        throw InvalidArgument("CSV line " + std::to_string(line_no) + ": expected " +
                              std::to_string(table.header.size()) + " cells");
      }
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

Table read_file(const std::filesystem::path& path) { return parse(read_text_file(path)); }

}  // namespace gppa::csv
