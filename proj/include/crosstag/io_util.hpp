#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace crosstag {

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

// Splits on single delimiter, keeping empty fields.
std::vector<std::string> split(std::string_view line, char delim);

// Splits on runs of whitespace, dropping empty fields.
std::vector<std::string> split_ws(std::string_view line);

// FNV-1a 64-bit, used for input digests in run metadata.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

// Fixed significant-digit form (alignment posterior fields).
std::string format_double(double v, int significant_digits);

double parse_double(const std::string& s);
long parse_long(const std::string& s);

}  // namespace crosstag
