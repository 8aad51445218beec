#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace ltd {

// Shortest decimal form that parses back to the identical double.
std::string format_double(double x);
double parse_double(std::string_view s);

// Backslash-escapes '\\' and '\n' so a token fits on one line.
std::string escape_token(std::string_view tok);
std::string unescape_token(std::string_view line);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// FNV-1a, used to stamp reports with the configuration they came from.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t x);

}  // namespace ltd
