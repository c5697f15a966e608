#pragma once

#include <span>
#include <string>
#include <vector>

namespace ubmbandit {

// 17 significant digits, enough to round-trip any double.
std::string format_double(double v);

std::string join(std::span<const double> values, char sep = ';');
std::string join(std::span<const long long> values, char sep = ';');
std::string join(std::span<const int> values, char sep = ';');

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace ubmbandit
