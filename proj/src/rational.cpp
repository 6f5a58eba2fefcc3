#include "codedmm/rational.hpp"

#include <charconv>
#include <string>

namespace codedmm {

namespace {

std::int64_t parse_int(std::string_view s, std::string_view whole) {
  std::int64_t v = 0;
  const auto *end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw RangeError("cannot parse rational \"" + std::string(whole) + "\"");
  }
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  return s;
}

} // namespace

Rational Rational::parse(std::string_view text) {
  const std::string_view s = trim(text);
  if (const auto slash = s.find('/'); slash != std::string_view::npos) {
    return Rational(parse_int(trim(s.substr(0, slash)), text),
                    parse_int(trim(s.substr(slash + 1)), text));
  }
  if (const auto dot = s.find('.'); dot != std::string_view::npos) {
    const std::string_view ip = s.substr(0, dot);
    const std::string_view fp = s.substr(dot + 1);
    if (fp.size() > 18 || (ip.empty() && fp.empty())) {
      throw RangeError("cannot parse rational \"" + std::string(text) + "\"");
    }
    const bool negative = !ip.empty() && ip.front() == '-';
    const std::string_view digits = negative || (!ip.empty() && ip.front() == '+') ? ip.substr(1) : ip;
    const std::int64_t whole = digits.empty() ? 0 : parse_int(digits, text);
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < fp.size(); ++i) {
      scale *= 10;
    }
    const std::int64_t frac = fp.empty() ? 0 : parse_int(fp, text);
    Rational r = Rational(whole) + Rational(frac, scale);
    return negative ? -r : r;
  }
  return Rational(parse_int(s, text));
}

} // namespace codedmm
