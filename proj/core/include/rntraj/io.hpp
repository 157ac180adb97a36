#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace rntraj::io {

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_integer(std::string_view text);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partially written file.
void atomic_write_file(const std::filesystem::path& path, std::string_view contents);

std::string_view trim(std::string_view text);

}  // namespace rntraj::io
