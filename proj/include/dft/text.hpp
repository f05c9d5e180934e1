#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dft::text {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
/// Splits on '\n', dropping a trailing '\r' from each line and a final empty line.
std::vector<std::string_view> lines(std::string_view s);
std::optional<std::uint64_t> parse_u64(std::string_view s);
std::optional<double> parse_double(std::string_view s);
bool is_hex(std::string_view s);
std::string to_lower(std::string_view s);

std::string read_file(const std::string& path);
/// Writes via a temporary file and rename so readers never see a partial file.
void write_file_atomic(const std::string& path, std::string_view content);

} // namespace dft::text
