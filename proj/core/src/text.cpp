#include "insample/text.hpp"

#include <array>
#include <charconv>
#include <stdexcept>
#include <system_error>

namespace insample {

namespace {

std::string to_chars_string(double x, std::chars_format fmt) {
  // fixed notation of 1e308 needs ~330 characters
  std::array<char, 400> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x, fmt);
  if (ec != std::errc()) throw std::runtime_error("cannot format real");
  return std::string(buf.data(), end);
}

}  // namespace

std::string format_real(double x) { return to_chars_string(x, std::chars_format::general); }

std::string format_fixed(double x) { return to_chars_string(x, std::chars_format::fixed); }

double parse_real(std::string_view text) {
  text = trim(text);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw std::invalid_argument("not a real number: '" + std::string(text) + "'");
  }
  return value;
}

unsigned long long parse_unsigned(std::string_view text) {
  text = trim(text);
  unsigned long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw std::invalid_argument("not a non-negative integer: '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(text.substr(start));
      return out;
    }
    out.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

}  // namespace insample
