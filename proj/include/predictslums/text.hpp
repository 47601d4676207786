#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace psl::text {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

/// Strict full-field parse; leading/trailing blanks allowed.
bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, long long& out);

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

std::string read_file(const std::string& path);
/// Writes through a temporary file and renames it into place.
void write_file(const std::string& path, std::string_view contents);

}  // namespace psl::text
