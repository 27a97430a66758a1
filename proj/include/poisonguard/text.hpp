#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace pg::text {

std::string trim(std::string_view s);
std::string lower(std::string_view s);

// "stairsup" -> "Stairsup", "STANDING" -> "Standing". First alphabetic
// character upper-cased, everything else lower-cased.
std::string title_case(std::string_view s);

std::vector<std::string> split(std::string_view s, char delim);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string replace_all(std::string s, std::string_view from, std::string_view to);
std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

// Number of Unicode scalar values in a UTF-8 string (continuation bytes are
// not counted; each invalid byte counts as one scalar).
std::size_t utf8_scalar_count(std::string_view s);

// Value formatted with a fixed number of significant digits ("%.*g").
std::string format_significant(double value, int digits);

bool iequals(std::string_view a, std::string_view b);
bool icontains(std::string_view haystack, std::string_view needle);
std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t pos = 0);

}  // namespace pg::text
