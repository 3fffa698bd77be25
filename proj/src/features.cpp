#include "parkcharge/features.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

namespace parkcharge::features {

namespace fs = std::filesystem;
using events::LabeledEvent;
using events::ParkingEvent;

std::string_view to_string(BaseFeature f) {
  switch (f) {
    case BaseFeature::h: return "h";
    case BaseFeature::m: return "m";
    case BaseFeature::dw: return "dw";
    case BaseFeature::s: return "s";
    case BaseFeature::wr: return "wr";
  }
  return "?";
}

std::set<BaseFeature> FeatureSpec::all_base() {
  return {BaseFeature::h, BaseFeature::m, BaseFeature::dw, BaseFeature::s, BaseFeature::wr};
}

FeatureSpec FeatureSpec::parse(std::string_view text) {
  FeatureSpec spec;
  const auto parts = split(trim(text), '+');
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string p = to_lower(trim(parts[i]));
    if (i > 0) {
      if (p == "spt") spec.use_spt = true;
      else if (p == "ocy") spec.use_ocy = true;
      else throw UsageError("unknown feature extension '" + p + "' (expected spt or ocy)");
      continue;
    }
    if (p == "all") {
      spec.base = all_base();
      continue;
    }
    for (const auto& tok : split(p, ',')) {
      const std::string t = trim(tok);
      if (t == "h") spec.base.insert(BaseFeature::h);
      else if (t == "m" || t == "tm") spec.base.insert(BaseFeature::m);
      else if (t == "dw") spec.base.insert(BaseFeature::dw);
      else if (t == "s") spec.base.insert(BaseFeature::s);
      else if (t == "wr") spec.base.insert(BaseFeature::wr);
      else throw UsageError("unknown feature '" + t + "'");
    }
  }
  return spec;
}

std::string FeatureSpec::name() const {
  std::string out;
  if (base == all_base()) {
    out = "all";
  } else {
    for (auto f : base) {
      if (!out.empty()) out += ',';
      out += to_string(f);
    }
  }
  if (use_spt) out += "+spt";
  if (use_ocy) out += "+ocy";
  return out;
}

void FeatureSpec::validate() const {
  if (base.empty() && !use_spt && !use_ocy) throw UsageError("feature spec selects no features");
  if ((use_spt || use_ocy) && !spatial)
    throw UsageError("feature spec " + name() + " needs a spatial model");
}

EventFeatures event_features(const ParkingEvent& e) {
  EventFeatures f;
  f.hour = hour_of(e.start);
  f.minute = minute_of(e.start) / 5 * 5;
  f.weekday = weekday_of(e.start);
  f.slot = e.slot;
  f.weather = e.weather;
  return f;
}

FrameIndex::FrameIndex(std::span<const ingest::OccupancyFrame> frames) {
  for (const auto& f : frames) {
    history_[f.slot].push_back({f.timestamp, f.busy});
    slots_.insert(f.slot);
  }
  for (auto& [slot, obs] : history_)
    std::stable_sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) { return a.t < b.t; });
}

std::optional<bool> FrameIndex::state_at(SlotId slot, TimePoint t) const {
  const auto it = history_.find(slot);
  if (it == history_.end()) return std::nullopt;
  const auto& obs = it->second;
  auto pos = std::upper_bound(obs.begin(), obs.end(), t,
                              [](TimePoint v, const Obs& o) { return v < o.t; });
  if (pos == obs.begin()) return std::nullopt;
  --pos;
  if (day_of(pos->t) != day_of(t)) return std::nullopt;
  return pos->busy;
}

std::vector<double> occupancy_vector(SlotId slot, TimePoint start, const FrameIndex& index,
                                     const spatial::SpatialModel& model,
                                     std::size_t* empty_clusters) {
  std::vector<double> out;
  out.reserve(model.cluster_ids.size());
  for (auto cluster : model.cluster_ids) {
    const auto members = model.members(cluster);
    std::size_t busy = 0;
    std::size_t observed = 0;
    for (auto m : members) {
      if (m == slot) {
        ++busy;
        ++observed;
        continue;
      }
      if (const auto s = index.state_at(m, start)) {
        ++observed;
        if (*s) ++busy;
      }
    }
    if (observed == 0) {
      if (empty_clusters) ++*empty_clusters;
      out.push_back(0.0);
      continue;
    }
    out.push_back(static_cast<double>(busy) / static_cast<double>(members.size()));
  }
  return out;
}

FeatureMatrix build_matrix(std::span<const LabeledEvent> events, const FeatureSpec& spec,
                           const FrameIndex& frames, const std::set<SlotId>& slot_universe,
                           int num_classes) {
  spec.validate();
  if (num_classes < 1) throw UsageError("num_classes must be positive");
  const auto has = [&](BaseFeature f) { return spec.base.count(f) > 0; };

  // Column name -> (group, extractor key); built in an unordered pass then sorted.
  std::vector<std::pair<std::string, std::string>> cols;
  if (has(BaseFeature::h)) cols.emplace_back("h", "h");
  if (has(BaseFeature::m)) cols.emplace_back("m", "m");
  if (has(BaseFeature::dw))
    for (int d = 0; d < 7; ++d) cols.emplace_back("dw=" + std::to_string(d), "dw");
  if (has(BaseFeature::s))
    for (auto s : slot_universe) cols.emplace_back("s=" + std::to_string(value(s)), "s");
  if (has(BaseFeature::wr))
    for (auto w : {Weather::sunny, Weather::cloudy, Weather::rainy, Weather::unknown})
      cols.emplace_back("wr=" + std::string(to_string(w)), "wr");
  if (spec.use_spt)
    for (auto c : spec.spatial->cluster_ids) cols.emplace_back("spt=" + spatial::cluster_name(c), "spt");
  if (spec.use_ocy)
    for (auto c : spec.spatial->cluster_ids) cols.emplace_back("ocy=" + spatial::cluster_name(c), "ocy");
  std::sort(cols.begin(), cols.end());

  FeatureMatrix m;
  m.num_classes = num_classes;
  std::map<std::string, std::size_t> col_index;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    m.columns.push_back(cols[i].first);
    m.groups[cols[i].second].push_back(i);
    col_index[cols[i].first] = i;
  }
  m.x = Matrix(events.size(), cols.size());

  for (std::size_t r = 0; r < events.size(); ++r) {
    const auto& e = events[r].event;
    const auto f = event_features(e);
    auto set = [&](const std::string& name, double v) { m.x(r, col_index.at(name)) = v; };
    if (has(BaseFeature::h)) set("h", f.hour);
    if (has(BaseFeature::m)) set("m", f.minute);
    if (has(BaseFeature::dw)) set("dw=" + std::to_string(f.weekday), 1.0);
    if (has(BaseFeature::s)) {
      if (!slot_universe.count(f.slot))
        throw DataError("event " + std::to_string(e.id) + " references unknown slot " +
                        std::to_string(value(f.slot)));
      set("s=" + std::to_string(value(f.slot)), 1.0);
    }
    if (has(BaseFeature::wr)) set("wr=" + std::string(to_string(f.weather)), 1.0);
    if (spec.use_spt || spec.use_ocy) {
      if (!spec.spatial->assignment.count(f.slot))
        throw DataError("event " + std::to_string(e.id) + " references slot " +
                        std::to_string(value(f.slot)) + " absent from the spatial model");
    }
    if (spec.use_spt) set("spt=" + spatial::cluster_name(spec.spatial->cluster_of(f.slot)), 1.0);
    if (spec.use_ocy) {
      const auto occ =
          occupancy_vector(f.slot, e.start, frames, *spec.spatial, &m.empty_cluster_warnings);
      for (std::size_t j = 0; j < occ.size(); ++j)
        set("ocy=" + spatial::cluster_name(spec.spatial->cluster_ids[j]), occ[j]);
    }
    if (events[r].label < 0 || events[r].label >= num_classes)
      throw DataError("event " + std::to_string(e.id) + " has a label outside the class scheme");
    m.targets.push_back(events[r].label);
    m.event_ids.push_back(e.id);
  }
  return m;
}

void write_matrix(const FeatureMatrix& m, const FeatureSpec& spec, const fs::path& csv_path) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw DataError("cannot write " + csv_path.string());
  out << "event_id";
  for (const auto& c : m.columns) out << ',' << c;
  out << ",target\n";
  for (std::size_t r = 0; r < m.x.rows(); ++r) {
    out << m.event_ids[r];
    for (double v : m.x.row(r)) out << ',' << format_double(v);
    out << ',' << m.targets[r] << '\n';
  }
  if (!out) throw DataError("write failed: " + csv_path.string());

  nlohmann::ordered_json meta;
  meta["spec"] = spec.name();
  meta["weekday_convention"] = "monday=0";
  meta["minute_rounding"] = "floor to 5";
  if (spec.spatial) meta["spatial"] = spec.spatial->describe();
  meta["columns"] = m.columns;
  nlohmann::ordered_json groups;
  for (const auto& [g, idx] : m.groups) groups[g] = idx;
  meta["column_groups"] = groups;
  meta["empty_cluster_warnings"] = m.empty_cluster_warnings;
  fs::path sidecar = csv_path;
  sidecar.replace_extension(".json");
  std::ofstream js(sidecar, std::ios::binary);
  if (!js) throw DataError("cannot write " + sidecar.string());
  js << meta.dump(2) << '\n';
}

}  // namespace parkcharge::features
