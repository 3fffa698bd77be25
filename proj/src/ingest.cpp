#include "parkcharge/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

namespace parkcharge::ingest {

namespace fs = std::filesystem;

namespace {

bool header_matches(const std::vector<std::string>& cols) {
  if (cols.size() != 6 && cols.size() != 7) return false;
  auto is = [&](std::size_t i, std::initializer_list<std::string_view> names) {
    const std::string c = to_lower(trim(cols[i]));
    return std::find(names.begin(), names.end(), c) != names.end();
  };
  return is(0, {"date"}) && is(1, {"time"}) && is(2, {"slot", "slot_id"}) &&
         is(3, {"busy", "occupancy", "occupancy_bit", "occupancy bit", "occupied"}) &&
         is(4, {"status", "occupancy_string", "occupancy string", "state"}) &&
         is(5, {"weather"}) && (cols.size() == 6 || is(6, {"camera"}));
}

std::optional<TimePoint> parse_cnr_datetime(const std::string& date, const std::string& time,
                                            DateOrder order) {
  const auto dparts = split(trim(date), '/');
  const auto tparts = split(trim(time), ':');
  if (dparts.size() != 3 || (tparts.size() != 2 && tparts.size() != 3)) return std::nullopt;
  auto a = parse_int(dparts[0]);
  auto b = parse_int(dparts[1]);
  const auto y = parse_int(dparts[2]);
  const auto h = parse_int(tparts[0]);
  const auto mi = parse_int(tparts[1]);
  if (!a || !b || !y || !h || !mi) return std::nullopt;
  if (order == DateOrder::month_first) std::swap(a, b);
  const std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(*y)},
                                        std::chrono::month{static_cast<unsigned>(*b)},
                                        std::chrono::day{static_cast<unsigned>(*a)}};
  if (!ymd.ok() || *h < 0 || *h > 23 || *mi < 0 || *mi > 59) return std::nullopt;
  return make_time(static_cast<int>(*y), static_cast<unsigned>(*b), static_cast<unsigned>(*a),
                   static_cast<int>(*h), static_cast<int>(*mi));
}

SlotLayout layout_from_frames(const std::vector<OccupancyFrame>& frames) {
  SlotLayout layout;
  for (const auto& f : frames) layout.push_back({f.slot, std::nullopt});
  return merge_layout({}, layout);
}

}  // namespace

std::size_t normalize_frames(std::vector<OccupancyFrame>& frames, std::vector<Warning>* warnings) {
  std::stable_sort(frames.begin(), frames.end(), [](const auto& a, const auto& b) {
    if (a.dataset != b.dataset) return a.dataset < b.dataset;
    if (a.slot != b.slot) return a.slot < b.slot;
    return a.timestamp < b.timestamp;
  });
  std::size_t dropped = 0;
  std::vector<OccupancyFrame> kept;
  kept.reserve(frames.size());
  for (auto& f : frames) {
    if (!kept.empty() && kept.back().dataset == f.dataset && kept.back().slot == f.slot &&
        kept.back().timestamp == f.timestamp) {
      ++dropped;
      if (warnings)
        warnings->push_back({0, f.dataset,
                             "duplicate frame for slot " + std::to_string(value(f.slot)) + " at " +
                                 format_iso(f.timestamp) + " dropped"});
      continue;
    }
    kept.push_back(std::move(f));
  }
  frames = std::move(kept);
  return dropped;
}

SlotLayout merge_layout(SlotLayout layout, const SlotLayout& extra) {
  std::map<SlotId, std::optional<Point>> merged;
  for (const SlotLayout* src : {static_cast<const SlotLayout*>(&layout), &extra}) {
    for (const auto& p : *src) {
      auto [it, inserted] = merged.try_emplace(p.slot, p.position);
      if (!inserted && !it->second && p.position) it->second = p.position;
    }
  }
  SlotLayout out;
  out.reserve(merged.size());
  for (const auto& [slot, pos] : merged) out.push_back({slot, pos});
  return out;
}

ParseResult parse_cnr_csv(const fs::path& path, const CnrOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  ParseResult result;
  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cols = split(line, ',');
    if (first_content) {
      first_content = false;
      if (!parse_int(split(cols[0], '/')[0])) {
        if (!header_matches(cols))
          throw DataError("header does not match date,time,slot,busy,status,weather[,camera]",
                          line_no);
        continue;
      }
    }
    if (cols.size() != 6 && cols.size() != 7)
      throw DataError("expected 6 or 7 fields, got " + std::to_string(cols.size()), line_no);
    const auto ts = parse_cnr_datetime(cols[0], cols[1], options.date_order);
    if (!ts) throw DataError("bad date/time '" + cols[0] + " " + cols[1] + "'", line_no);
    const auto slot = parse_int(cols[2]);
    if (!slot) throw DataError("bad slot id '" + cols[2] + "'", line_no);
    const auto bit = parse_int(cols[3]);
    if (!bit || (*bit != 0 && *bit != 1))
      throw DataError("bad occupancy bit '" + cols[3] + "'", line_no);
    const std::string status = to_lower(trim(cols[4]));
    if (status != "busy" && status != "free")
      throw DataError("bad occupancy string '" + cols[4] + "'", line_no);
    if ((status == "busy") != (*bit == 1))
      throw DataError("occupancy bit and string disagree", line_no);
    const auto weather = parse_weather_strict(cols[5]);
    if (!weather)
      result.warnings.push_back({line_no, path.string(), "unknown weather '" + trim(cols[5]) + "'"});
    OccupancyFrame f;
    f.dataset = options.dataset;
    f.camera = cols.size() == 7 ? trim(cols[6]) : std::string{};
    f.timestamp = *ts;
    f.slot = SlotId{static_cast<std::int32_t>(*slot)};
    f.busy = *bit == 1;
    f.weather = weather.value_or(Weather::unknown);
    result.frames.push_back(std::move(f));
  }
  normalize_frames(result.frames, &result.warnings);
  result.layout = layout_from_frames(result.frames);
  return result;
}

std::optional<TimePoint> parse_pklot_timestamp(const std::string& stem) {
  // 2012-09-11_15_16_58
  if (stem.size() < 16) return std::nullopt;
  const auto date = split(stem.substr(0, 10), '-');
  const auto clock = split(stem.substr(11), '_');
  if (stem[10] != '_' || date.size() != 3 || clock.size() < 2) return std::nullopt;
  const auto y = parse_int(date[0]);
  const auto mo = parse_int(date[1]);
  const auto d = parse_int(date[2]);
  const auto h = parse_int(clock[0]);
  const auto mi = parse_int(clock[1]);
  if (!y || !mo || !d || !h || !mi) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(*y)},
                                        std::chrono::month{static_cast<unsigned>(*mo)},
                                        std::chrono::day{static_cast<unsigned>(*d)}};
  if (!ymd.ok() || *h < 0 || *h > 23 || *mi < 0 || *mi > 59) return std::nullopt;
  return make_time(static_cast<int>(*y), static_cast<unsigned>(*mo), static_cast<unsigned>(*d),
                   static_cast<int>(*h), static_cast<int>(*mi));
}

void parse_pklot_document(std::istream& in, TimePoint timestamp, Weather weather,
                          const std::string& dataset, const std::string& source,
                          ParseResult& into) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw DataError(source + ": " + e.message(), e.line());
  }
  const auto parking = tree.get_child_optional("parking");
  if (!parking) throw DataError(source + ": missing <parking> root");
  const std::string camera = parking->get<std::string>("<xmlattr>.id", "");
  for (const auto& [name, space] : *parking) {
    if (name != "space") continue;
    const auto id = space.get_optional<std::string>("<xmlattr>.id");
    const auto slot = id ? parse_int(*id) : std::nullopt;
    if (!slot) {
      into.warnings.push_back({0, source, "space without a numeric id skipped"});
      continue;
    }
    const auto occupied = space.get_optional<std::string>("<xmlattr>.occupied");
    const auto bit = occupied ? parse_int(*occupied) : std::nullopt;
    if (!bit || (*bit != 0 && *bit != 1)) {
      into.warnings.push_back(
          {0, source, "space " + *id + " has no usable occupied attribute; skipped"});
      continue;
    }
    OccupancyFrame f;
    f.dataset = dataset;
    f.camera = camera;
    f.timestamp = timestamp;
    f.slot = SlotId{static_cast<std::int32_t>(*slot)};
    f.busy = *bit == 1;
    f.weather = weather;
    into.frames.push_back(f);

    const auto cx = space.get_optional<double>("rotatedRect.center.<xmlattr>.x");
    const auto cy = space.get_optional<double>("rotatedRect.center.<xmlattr>.y");
    if (cx && cy)
      into.layout.push_back({f.slot, Point{*cx, *cy}});
    else
      into.layout.push_back({f.slot, std::nullopt});
  }
}

ParseResult parse_pklot_xml(const fs::path& dir, const PklotOptions& options) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  const std::string dataset = options.dataset.value_or(dir.filename().string());

  struct Annotation {
    TimePoint timestamp;
    fs::path path;
  };
  std::vector<Annotation> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file() || to_lower(entry.path().extension().string()) != ".xml") continue;
    const auto ts = parse_pklot_timestamp(entry.path().stem().string());
    if (!ts) throw DataError("unparseable timestamp in file name " + entry.path().string());
    files.push_back({*ts, entry.path()});
  }
  std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) {
    return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.path < b.path;
  });

  ParseResult result;
  for (const auto& file : files) {
    Weather weather = Weather::unknown;
    for (const auto& part : fs::relative(file.path, dir).parent_path()) {
      if (const auto w = parse_weather_strict(part.string()); w && *w != Weather::unknown)
        weather = *w;
    }
    std::ifstream in(file.path);
    if (!in) throw DataError("cannot open " + file.path.string());
    parse_pklot_document(in, file.timestamp, weather, dataset, file.path.string(), result);
  }
  normalize_frames(result.frames, &result.warnings);
  result.layout = merge_layout({}, result.layout);
  return result;
}

SlotLayout read_layout(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  SlotLayout layout;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cols = split(line, ',');
    if (line_no == 1) {
      if (cols.size() != 3 || trim(cols[0]) != "slot_id")
        throw DataError(path.string() + ": expected header slot_id,x,y", line_no);
      continue;
    }
    if (cols.size() != 3) throw DataError(path.string() + ": expected 3 fields", line_no);
    const auto slot = parse_int(cols[0]);
    if (!slot) throw DataError(path.string() + ": bad slot id", line_no);
    const std::string xs = trim(cols[1]);
    const std::string ys = trim(cols[2]);
    SlotPosition p{SlotId{static_cast<std::int32_t>(*slot)}, std::nullopt};
    if (!xs.empty() || !ys.empty()) {
      const auto x = parse_double(xs);
      const auto y = parse_double(ys);
      if (!x || !y) throw DataError(path.string() + ": bad coordinates", line_no);
      p.position = Point{*x, *y};
    }
    layout.push_back(p);
  }
  return merge_layout({}, layout);
}

std::vector<OccupancyFrame> read_frames(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<OccupancyFrame> frames;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cols = split(line, ',');
    if (line_no == 1) {
      if (trim(line) != "dataset,camera,timestamp,slot_id,busy,weather")
        throw DataError(path.string() + ": unexpected frames header", line_no);
      continue;
    }
    if (cols.size() != 6) throw DataError(path.string() + ": expected 6 fields", line_no);
    OccupancyFrame f;
    f.dataset = cols[0];
    f.camera = cols[1];
    const auto ts = parse_iso(cols[2]);
    const auto slot = parse_int(cols[3]);
    const auto weather = parse_weather_strict(cols[5]);
    const std::string busy = trim(cols[4]);
    if (!ts || !slot || !weather || (busy != "0" && busy != "1"))
      throw DataError(path.string() + ": malformed frame row", line_no);
    f.timestamp = *ts;
    f.slot = SlotId{static_cast<std::int32_t>(*slot)};
    f.busy = busy == "1";
    f.weather = *weather;
    frames.push_back(std::move(f));
  }
  normalize_frames(frames, nullptr);
  return frames;
}

CanonicalPaths write_canonical(const std::vector<OccupancyFrame>& frames, const SlotLayout& layout,
                               const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());
  CanonicalPaths paths{out_dir / "frames.csv", out_dir / "layout.csv"};

  std::ofstream fo(paths.frames, std::ios::binary);
  if (!fo) throw DataError("cannot write " + paths.frames.string());
  fo << "dataset,camera,timestamp,slot_id,busy,weather\n";
  for (const auto& f : frames) {
    fo << f.dataset << ',' << f.camera << ',' << format_iso(f.timestamp) << ',' << value(f.slot)
       << ',' << (f.busy ? 1 : 0) << ',' << to_string(f.weather) << '\n';
  }
  if (!fo) throw DataError("write failed: " + paths.frames.string());

  SlotLayout full = layout;
  for (const auto& f : frames) full.push_back({f.slot, std::nullopt});
  full = merge_layout({}, full);

  std::ofstream lo(paths.layout, std::ios::binary);
  if (!lo) throw DataError("cannot write " + paths.layout.string());
  lo << "slot_id,x,y\n";
  for (const auto& p : full) {
    lo << value(p.slot) << ',';
    if (p.position) lo << format_double(p.position->x) << ',' << format_double(p.position->y);
    else lo << ',';
    lo << '\n';
  }
  if (!lo) throw DataError("write failed: " + paths.layout.string());
  return paths;
}

}  // namespace parkcharge::ingest
