#include "parkcharge/common.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>

namespace parkcharge {

namespace chr = std::chrono;

std::string_view to_string(Weather w) {
  switch (w) {
    case Weather::sunny: return "sunny";
    case Weather::cloudy: return "cloudy";
    case Weather::rainy: return "rainy";
    case Weather::unknown: break;
  }
  return "unknown";
}

std::optional<Weather> parse_weather_strict(std::string_view text) {
  const std::string t = to_lower(trim(text));
  if (t == "sunny") return Weather::sunny;
  if (t == "cloudy" || t == "overcast") return Weather::cloudy;
  if (t == "rainy" || t == "rain") return Weather::rainy;
  if (t == "unknown") return Weather::unknown;
  return std::nullopt;
}

Weather parse_weather(std::string_view text) {
  return parse_weather_strict(text).value_or(Weather::unknown);
}

DataError::DataError(const std::string& what, std::size_t line)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

TimePoint make_time(int year, unsigned month, unsigned day, int hour, int minute) {
  const chr::year_month_day ymd{chr::year{year}, chr::month{month}, chr::day{day}};
  return chr::sys_days{ymd} + chr::hours{hour} + chr::minutes{minute};
}

std::string format_iso(TimePoint t) {
  const auto day = chr::floor<chr::days>(t);
  const chr::year_month_day ymd{day};
  const int mod = minute_of_day(t);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), mod / 60,
                mod % 60);
  return buf;
}

std::optional<TimePoint> parse_iso(std::string_view text) {
  const std::string s = trim(text);
  // YYYY-MM-DDTHH:MM (a trailing ":SS" is accepted and ignored)
  if (s.size() < 16 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
      s[13] != ':')
    return std::nullopt;
  const auto y = parse_int(s.substr(0, 4));
  const auto mo = parse_int(s.substr(5, 2));
  const auto d = parse_int(s.substr(8, 2));
  const auto h = parse_int(s.substr(11, 2));
  const auto mi = parse_int(s.substr(14, 2));
  if (!y || !mo || !d || !h || !mi) return std::nullopt;
  if (s.size() != 16 && !(s.size() == 19 && s[16] == ':')) return std::nullopt;
  const chr::year_month_day ymd{chr::year{static_cast<int>(*y)}, chr::month{static_cast<unsigned>(*mo)},
                                chr::day{static_cast<unsigned>(*d)}};
  if (!ymd.ok() || *h < 0 || *h > 23 || *mi < 0 || *mi > 59) return std::nullopt;
  return make_time(static_cast<int>(*y), static_cast<unsigned>(*mo), static_cast<unsigned>(*d),
                   static_cast<int>(*h), static_cast<int>(*mi));
}

chr::sys_days day_of(TimePoint t) { return chr::floor<chr::days>(t); }

int minute_of_day(TimePoint t) {
  return static_cast<int>((t - chr::floor<chr::days>(t)).count());
}

int hour_of(TimePoint t) { return minute_of_day(t) / 60; }

int minute_of(TimePoint t) { return minute_of_day(t) % 60; }

int weekday_of(TimePoint t) {
  const chr::weekday wd{day_of(t)};
  return static_cast<int>((wd.c_encoding() + 6) % 7);
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<long long> parse_int(std::string_view text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  long long v = 0;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_double(std::string_view text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double v = 0;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace parkcharge
