#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace corvid::io {

// Throws Error(IoError) naming the path.
std::string read_text(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it into place.
void write_atomic(const std::filesystem::path& path, std::string_view content);

// Splits one CSV line on commas. Quoting is not supported; none of the
// library's formats need it.
std::vector<std::string> split_csv_line(std::string_view line);

// Splits text into lines, dropping a trailing '\r' and empty trailing lines.
std::vector<std::string_view> lines(std::string_view text);

std::string trim(std::string_view s);

// Strict numeric parsers; throw Error(SchemaError) with `context` on failure.
long long parse_int(std::string_view s, std::string_view context);
double parse_double(std::string_view s, std::string_view context);

std::string base64_encode(std::string_view bytes);
// Throws Error(SchemaError) on malformed input.
std::string base64_decode(std::string_view text);

// Formats a double with the shortest representation that round-trips.
std::string format_double(double value);

}  // namespace corvid::io
