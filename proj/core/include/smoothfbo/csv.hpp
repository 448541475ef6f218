#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace smoothfbo {

// Shortest decimal string that parses back to exactly the same double
// (via from_chars). nan and +/-inf render as "nan", "inf", "-inf".
std::string format_double(double v);

// Inverse of format_double; accepts anything from_chars accepts plus the
// nan/inf spellings above. Throws Error on trailing garbage or empty input.
double parse_double(std::string_view s);

long parse_long(std::string_view s);

std::vector<std::string> split(std::string_view line, char sep);

std::string join(const std::vector<std::string>& cells, char sep);

// Whole-file helpers; read_text_file throws Error when the file is missing,
// write_text_file creates parent directories.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

}  // namespace smoothfbo
