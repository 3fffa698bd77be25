#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace parkcharge {

/// Parking slot identifier. Both source datasets number their slots.
enum class SlotId : std::int32_t {};

constexpr std::int32_t value(SlotId id) { return static_cast<std::int32_t>(id); }

/// Minute-resolution calendar time (UTC, no zone handling).
using TimePoint = std::chrono::sys_time<std::chrono::minutes>;

enum class Weather { sunny, cloudy, rainy, unknown };

inline constexpr std::size_t kWeatherCount = 4;

std::string_view to_string(Weather w);

/// Case-insensitive; anything unrecognised maps to Weather::unknown.
Weather parse_weather(std::string_view text);

/// Strict variant used for canonical files.
std::optional<Weather> parse_weather_strict(std::string_view text);

/// Input data is malformed or inconsistent. Carries the offending line when known.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& what, std::size_t line = 0);
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Caller supplied an invalid argument or configuration.
class UsageError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// One skipped or degraded input record.
struct Warning {
  std::size_t line = 0;
  std::string source;
  std::string reason;
};

// Time helpers.

TimePoint make_time(int year, unsigned month, unsigned day, int hour, int minute);

/// "YYYY-MM-DDTHH:MM".
std::string format_iso(TimePoint t);
std::optional<TimePoint> parse_iso(std::string_view text);

std::chrono::sys_days day_of(TimePoint t);
int hour_of(TimePoint t);
int minute_of(TimePoint t);
/// Monday = 0 ... Sunday = 6.
int weekday_of(TimePoint t);
/// Minutes elapsed since midnight of the same day.
int minute_of_day(TimePoint t);

// Text helpers shared by the CSV readers and writers.

std::vector<std::string> split(std::string_view line, char sep);
std::string trim(std::string_view text);
std::string to_lower(std::string_view text);
std::optional<long long> parse_int(std::string_view text);
std::optional<double> parse_double(std::string_view text);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// 64-bit FNV-1a, used for schema and dataset fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 1469598103934665603ULL);
std::string hex64(std::uint64_t v);

}  // namespace parkcharge

template <>
struct std::hash<parkcharge::SlotId> {
  std::size_t operator()(parkcharge::SlotId id) const noexcept {
    return std::hash<std::int32_t>{}(parkcharge::value(id));
  }
};
