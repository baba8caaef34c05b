#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cbrx {

// Finite decimal number spanning the whole input; no locale involvement.
std::optional<double> parse_number(std::string_view s);

// Shortest representation that parses back to the same double.
std::string format_number(double x);

// printf-style fixed notation ("%.*f"), round-half-even on exact ties.
std::string fixed(double x, int decimals);

std::string zero_padded(std::size_t n, int width);

std::vector<std::string> split(std::string_view s, char sep);

}  // namespace cbrx
