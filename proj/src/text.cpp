#include "poisonguard/text.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

namespace pg::text {

namespace {
bool is_space(unsigned char c) { return std::isspace(c) != 0; }
char to_lower_c(unsigned char c) { return static_cast<char>(std::tolower(c)); }
char to_upper_c(unsigned char c) { return static_cast<char>(std::toupper(c)); }
}  // namespace

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return to_lower_c(c); });
  return out;
}

std::string title_case(std::string_view s) {
  std::string out = lower(s);
  for (char& c : out) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      c = to_upper_c(static_cast<unsigned char>(c));
      break;
    }
  }
  return out;
}

std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(delim, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(s.substr(start));
      break;
    }
    parts.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  if (from.empty()) return s;
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t count = 0;
  std::size_t pos = 0;
  while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

std::size_t utf8_scalar_count(std::string_view s) {
  std::size_t count = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++count;
  }
  return count;
}

std::string format_significant(double value, int digits) {
  if (value == 0.0) {  // covers -0.0; "%#g" would print one digit short here
    std::string out = "0.";
    out.append(static_cast<std::size_t>(digits), '0');
    return out;
  }
  // Alternate form keeps trailing zeros so every value shows the same number
  // of significant digits.
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%#.*g", digits, value);
  std::string s = buf;
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (to_lower_c(static_cast<unsigned char>(a[i])) !=
        to_lower_c(static_cast<unsigned char>(b[i])))
      return false;
  }
  return true;
}

std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t pos) {
  if (needle.empty() || haystack.size() < needle.size()) return std::string_view::npos;
  for (std::size_t i = pos; i + needle.size() <= haystack.size(); ++i) {
    if (iequals(haystack.substr(i, needle.size()), needle)) return i;
  }
  return std::string_view::npos;
}

bool icontains(std::string_view haystack, std::string_view needle) {
  return ifind(haystack, needle) != std::string_view::npos;
}

}  // namespace pg::text
