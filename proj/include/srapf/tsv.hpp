#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "srapf/tensor.hpp"

namespace srapf {

// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);

// Strict parse of the whole field; throws FormatError otherwise.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::vector<std::string_view> split(std::string_view line, char sep);

// Comma-separated row of doubles.
std::string format_row(const RowVector& row);
RowVector parse_row(std::string_view text);

}  // namespace srapf
