#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gazelens::text {

/// Splits one CSV record on commas. Quoting is not supported; none of the
/// formats read here carry embedded commas.
std::vector<std::string_view> split_csv(std::string_view line);

std::string_view trim(std::string_view s) noexcept;

/// Strict parse: the whole field must be a finite number.
bool parse_double(std::string_view field, double& out) noexcept;
bool parse_int(std::string_view field, long long& out) noexcept;

/// Shortest text with 9 significant digits ("%.9g" semantics).
std::string format_double(double v);
/// Round-trip exact representation (shortest form that reparses bit-equal).
std::string format_exact(double v);

/// Reads a whole file; throws gazelens::Error("io", ...) when unreadable.
std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename so readers never observe a
/// partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Line splitter that tolerates CRLF endings and a UTF-8 BOM on the first line.
std::vector<std::string_view> split_lines(std::string_view content);

}  // namespace gazelens::text
