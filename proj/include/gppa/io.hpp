#pragma once

#include "gppa/types.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace gppa {

/// A file or directory could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

std::string read_text_file(const std::filesystem::path& path);
/// Writes bytes verbatim (no newline translation), creating parent directories.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace gppa
