#include "parkcharge/events.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

namespace parkcharge::events {

namespace fs = std::filesystem;
using ingest::OccupancyFrame;

ClassScheme::ClassScheme(std::string name, std::vector<int> boundaries,
                         std::vector<std::string> labels)
    : name_(std::move(name)), boundaries_(std::move(boundaries)), labels_(std::move(labels)) {
  if (labels_.size() != boundaries_.size() + 1)
    throw UsageError("class scheme needs exactly one more label than boundaries");
  if (!std::is_sorted(boundaries_.begin(), boundaries_.end()) ||
      std::adjacent_find(boundaries_.begin(), boundaries_.end()) != boundaries_.end())
    throw UsageError("class boundaries must be strictly increasing");
}

ClassScheme ClassScheme::low() { return {"low", {60, 240}, {"Short", "Mid", "Long"}}; }

ClassScheme ClassScheme::high() {
  return {"high",
          {30, 60, 120, 240, 480},
          {"Short1", "Short2", "Mid1", "Mid2", "Long1", "Long2"}};
}

ClassScheme ClassScheme::by_name(std::string_view name) {
  if (name == "low") return low();
  if (name == "high") return high();
  throw UsageError("unknown class scheme '" + std::string(name) + "' (expected low or high)");
}

int ClassScheme::classify(int duration_min) const {
  // Right-closed intervals: a duration equal to a boundary stays in the lower class.
  return static_cast<int>(std::lower_bound(boundaries_.begin(), boundaries_.end(), duration_min) -
                          boundaries_.begin());
}

namespace {

double median_interval(std::span<const OccupancyFrame> day) {
  std::vector<long long> gaps;
  for (std::size_t i = 1; i < day.size(); ++i)
    gaps.push_back((day[i].timestamp - day[i - 1].timestamp).count());
  std::sort(gaps.begin(), gaps.end());
  const std::size_t n = gaps.size();
  return n % 2 ? static_cast<double>(gaps[n / 2])
               : 0.5 * static_cast<double>(gaps[n / 2 - 1] + gaps[n / 2]);
}

void extract_day(std::span<const OccupancyFrame> day, double gap_factor,
                 std::vector<ParkingEvent>& out) {
  const std::size_t n = day.size();
  const bool single = n < 2;
  const double limit = single ? 0.0 : gap_factor * median_interval(day);
  auto gap_exceeded = [&](std::size_t from, std::size_t to) {
    for (std::size_t k = from; k < to; ++k)
      if (static_cast<double>((day[k + 1].timestamp - day[k].timestamp).count()) > limit)
        return true;
    return false;
  };

  std::size_t i = 0;
  while (i < n) {
    if (!day[i].busy) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && day[j].busy) ++j;

    ParkingEvent e;
    e.dataset = day[i].dataset;
    e.slot = day[i].slot;
    e.start = day[i].timestamp;
    e.weather = day[i].weather;
    const bool open_end = j == n;
    const TimePoint end = open_end ? day[n - 1].timestamp : day[j].timestamp;
    e.duration_min = static_cast<int>((end - e.start).count());
    // Check gaps from the preceding free frame through the closing free frame.
    const std::size_t gap_from = i == 0 ? 0 : i - 1;
    const std::size_t gap_to = open_end ? n - 1 : j;
    e.partial = single || i == 0 || open_end || gap_exceeded(gap_from, gap_to);
    out.push_back(std::move(e));
    i = j;
  }
}

}  // namespace

std::vector<ParkingEvent> extract_events(std::span<const OccupancyFrame> frames,
                                         const ExtractOptions& options) {
  if (!(options.gap_factor > 0)) throw UsageError("gap_factor must be positive");
  for (std::size_t k = 1; k < frames.size(); ++k) {
    const auto& a = frames[k - 1];
    const auto& b = frames[k];
    if (a.dataset == b.dataset && a.slot == b.slot && !(a.timestamp < b.timestamp))
      throw DataError("frames for slot " + std::to_string(value(b.slot)) +
                      " are not strictly ordered by timestamp at " + format_iso(b.timestamp));
  }

  std::vector<ParkingEvent> out;
  std::size_t begin = 0;
  while (begin < frames.size()) {
    std::size_t end = begin + 1;
    const auto day = day_of(frames[begin].timestamp);
    while (end < frames.size() && frames[end].dataset == frames[begin].dataset &&
           frames[end].slot == frames[begin].slot && day_of(frames[end].timestamp) == day)
      ++end;
    extract_day(frames.subspan(begin, end - begin), options.gap_factor, out);
    begin = end;
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.dataset != b.dataset) return a.dataset < b.dataset;
    if (a.slot != b.slot) return a.slot < b.slot;
    return a.start < b.start;
  });
  for (std::size_t k = 0; k < out.size(); ++k) out[k].id = k;
  return out;
}

std::vector<ParkingEvent> clean_events(std::span<const ParkingEvent> events,
                                       std::span<const OccupancyFrame> frames,
                                       const CleanOptions& options) {
  std::map<std::string, std::set<SlotId>> lot_slots;
  std::map<std::pair<std::string, std::chrono::sys_days>, std::set<SlotId>> reporting;
  for (const auto& f : frames) {
    lot_slots[f.dataset].insert(f.slot);
    reporting[{f.dataset, day_of(f.timestamp)}].insert(f.slot);
  }

  auto day_ok = [&](const ParkingEvent& e) {
    const auto lot = lot_slots.find(e.dataset);
    const auto rep = reporting.find({e.dataset, day_of(e.start)});
    if (lot == lot_slots.end() || rep == reporting.end()) return false;
    const double total =
        static_cast<double>(options.total_slots.value_or(lot->second.size()));
    return static_cast<double>(rep->second.size()) >= options.min_slot_coverage * total;
  };

  std::vector<ParkingEvent> out;
  for (const auto& e : events)
    if (!e.partial && day_ok(e)) out.push_back(e);
  return out;
}

std::vector<LabeledEvent> label_events(std::span<const ParkingEvent> events,
                                       const ClassScheme& scheme) {
  std::vector<LabeledEvent> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back({e, scheme.classify(e.duration_min)});
  return out;
}

ClassDistribution normalized_entropy(std::span<const double> frequencies) {
  if (frequencies.empty()) throw UsageError("entropy of an empty distribution");
  double total = 0;
  for (double f : frequencies) {
    if (f < 0 || !std::isfinite(f)) throw UsageError("frequencies must be finite and non-negative");
    total += f;
  }
  if (total <= 0) throw UsageError("frequencies sum to zero");
  ClassDistribution d;
  d.frequencies.reserve(frequencies.size());
  double h = 0;
  for (double f : frequencies) {
    const double p = f / total;
    d.frequencies.push_back(p);
    if (p > 0) h -= p * std::log2(p);
  }
  d.entropy = frequencies.size() > 1 ? h / std::log2(static_cast<double>(frequencies.size())) : 0.0;
  return d;
}

ClassDistribution class_distribution_entropy(std::span<const int> labels, int num_classes) {
  if (labels.empty()) throw UsageError("entropy needs at least one label");
  if (num_classes < 1) throw UsageError("num_classes must be positive");
  std::vector<double> counts(static_cast<std::size_t>(num_classes), 0.0);
  for (int l : labels) {
    if (l < 0 || l >= num_classes) throw UsageError("label outside [0, num_classes)");
    counts[static_cast<std::size_t>(l)] += 1.0;
  }
  return normalized_entropy(counts);
}

void write_events(const fs::path& path, std::span<const ParkingEvent> events) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const auto low = ClassScheme::low();
  const auto high = ClassScheme::high();
  out << "event_id,slot_id,t_start,duration_min,weather,partial,class_low,class_high\n";
  for (const auto& e : events) {
    out << e.id << ',' << value(e.slot) << ',' << format_iso(e.start) << ',' << e.duration_min
        << ',' << to_string(e.weather) << ',' << (e.partial ? 1 : 0) << ','
        << low.classify(e.duration_min) << ',' << high.classify(e.duration_min) << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<ParkingEvent> read_events(const fs::path& path, const std::string& dataset) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<ParkingEvent> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (line_no == 1) {
      if (trim(line) != "event_id,slot_id,t_start,duration_min,weather,partial,class_low,class_high")
        throw DataError(path.string() + ": unexpected events header", line_no);
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() != 8) throw DataError(path.string() + ": expected 8 fields", line_no);
    const auto id = parse_int(cols[0]);
    const auto slot = parse_int(cols[1]);
    const auto start = parse_iso(cols[2]);
    const auto dur = parse_int(cols[3]);
    const auto weather = parse_weather_strict(cols[4]);
    const auto partial = parse_int(cols[5]);
    if (!id || *id < 0 || !slot || !start || !dur || *dur < 0 || !weather || !partial)
      throw DataError(path.string() + ": malformed event row", line_no);
    ParkingEvent e;
    e.id = static_cast<EventId>(*id);
    e.dataset = dataset;
    e.slot = SlotId{static_cast<std::int32_t>(*slot)};
    e.start = *start;
    e.duration_min = static_cast<int>(*dur);
    e.weather = *weather;
    e.partial = *partial != 0;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace parkcharge::events
