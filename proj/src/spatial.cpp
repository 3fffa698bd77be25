#include "parkcharge/spatial.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include "json.hpp"

#include "parkcharge/rng.hpp"

namespace parkcharge::spatial {

namespace fs = std::filesystem;
using ingest::Point;

std::string cluster_name(ClusterId id) { return id == kNoise ? "noise" : std::to_string(id); }

ClusterId SpatialModel::cluster_of(SlotId slot) const {
  const auto it = assignment.find(slot);
  if (it == assignment.end())
    throw DataError("slot " + std::to_string(value(slot)) + " is not in the spatial model");
  return it->second;
}

std::vector<SlotId> SpatialModel::members(ClusterId cluster) const {
  std::vector<SlotId> out;
  for (const auto& [slot, c] : assignment)
    if (c == cluster) out.push_back(slot);
  return out;
}

std::string SpatialModel::describe() const {
  if (algorithm == Algorithm::kmeans) return "kmeans(k=" + std::to_string(kmeans.k) + ")";
  return "dbscan(eps=" + format_double(dbscan.eps) + ",min=" + std::to_string(dbscan.min_samples) +
         ")";
}

namespace {

struct Located {
  SlotId slot;
  Point p;
};

std::vector<Located> located(const ingest::SlotLayout& layout) {
  std::vector<Located> out;
  out.reserve(layout.size());
  for (const auto& s : layout) {
    if (!s.position)
      throw DataError("slot " + std::to_string(value(s.slot)) +
                      " has no coordinates; spatial clustering needs a geometry layout");
    out.push_back({s.slot, *s.position});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.slot < b.slot; });
  return out;
}

double dist2(const Point& a, const Point& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

void finish(SpatialModel& m) {
  std::set<ClusterId> ids;
  for (const auto& [slot, c] : m.assignment) ids.insert(c);
  m.cluster_ids.assign(ids.begin(), ids.end());
}

struct LloydRun {
  std::vector<std::size_t> assign;
  std::vector<double> wcss;
  int iterations = 0;
};

LloydRun lloyd(const std::vector<Located>& pts, std::size_t k, std::uint64_t seed, int max_iter) {
  const std::size_t n = pts.size();
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  shuffle(std::span<std::size_t>(order), rng);
  std::vector<Point> centers;
  std::vector<bool> used(n, false);
  for (std::size_t idx : order) {
    if (centers.size() == k) break;
    const bool dup = std::any_of(centers.begin(), centers.end(),
                                 [&](const Point& c) { return c == pts[idx].p; });
    if (!dup) {
      centers.push_back(pts[idx].p);
      used[idx] = true;
    }
  }
  // Fewer distinct coordinates than k: fall back to repeated points.
  for (std::size_t idx : order) {
    if (centers.size() == k) break;
    if (!used[idx]) centers.push_back(pts[idx].p);
  }

  LloydRun run;
  run.assign.assign(n, std::numeric_limits<std::size_t>::max());
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    double wcss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = dist2(pts[i].p, centers[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = dist2(pts[i].p, centers[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (run.assign[i] != best) changed = true;
      run.assign[i] = best;
      wcss += best_d;
    }
    run.wcss.push_back(wcss);
    run.iterations = iter + 1;
    if (!changed && iter > 0) break;

    std::vector<Point> sum(k);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[run.assign[i]].x += pts[i].p.x;
      sum[run.assign[i]].y += pts[i].p.y;
      ++count[run.assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c)
      if (count[c] > 0)
        centers[c] = {sum[c].x / static_cast<double>(count[c]),
                      sum[c].y / static_cast<double>(count[c])};
  }
  return run;
}

}  // namespace

SpatialModel kmeans_fit(const ingest::SlotLayout& layout, const KMeansParams& params) {
  const auto pts = located(layout);
  const std::size_t n = pts.size();
  if (params.k < 2) throw UsageError("kmeans needs k >= 2");
  if (static_cast<std::size_t>(params.k) > n)
    throw UsageError("kmeans k=" + std::to_string(params.k) + " exceeds the " + std::to_string(n) +
                     " slots of the layout");
  const auto k = static_cast<std::size_t>(params.k);

  if (params.n_init < 1) throw UsageError("kmeans needs n_init >= 1");

  SpatialModel model;
  model.algorithm = Algorithm::kmeans;
  model.kmeans = params;
  LloydRun best;
  for (int r = 0; r < params.n_init; ++r) {
    auto run = lloyd(pts, k, mix_seed(params.seed, static_cast<std::uint64_t>(r)),
                     params.max_iterations);
    if (r == 0 || run.wcss.back() < best.wcss.back()) best = std::move(run);
  }
  const auto& assign = best.assign;
  model.wcss_history = best.wcss;
  model.iterations = best.iterations;

  // Compact labels in center order, skipping empty clusters.
  std::vector<int> compact(k, -1);
  int next = 0;
  for (std::size_t c = 0; c < k; ++c)
    if (std::find(assign.begin(), assign.end(), c) != assign.end()) compact[c] = next++;
  for (std::size_t i = 0; i < n; ++i) model.assignment[pts[i].slot] = compact[assign[i]];
  finish(model);
  return model;
}

SpatialModel dbscan_fit(const ingest::SlotLayout& layout, const DbscanParams& params) {
  if (!(params.eps > 0)) throw UsageError("dbscan eps must be positive");
  if (params.min_samples < 1) throw UsageError("dbscan min_samples must be >= 1");
  const auto pts = located(layout);
  const std::size_t n = pts.size();
  const double eps2 = params.eps * params.eps;

  std::vector<std::vector<std::size_t>> nbrs(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (dist2(pts[i].p, pts[j].p) <= eps2) nbrs[i].push_back(j);
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i)
    core[i] = nbrs[i].size() >= static_cast<std::size_t>(params.min_samples);

  // Points are sorted by slot id, so scanning in index order numbers the
  // core components by their smallest slot.
  constexpr int unset = std::numeric_limits<int>::min();
  std::vector<int> label(n, unset);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || label[i] != unset) continue;
    std::vector<std::size_t> stack{i};
    label[i] = next;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v : nbrs[u])
        if (core[v] && label[v] == unset) {
          label[v] = next;
          stack.push_back(v);
        }
    }
    ++next;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    double best_d = std::numeric_limits<double>::infinity();
    int best = kNoise;
    for (std::size_t j : nbrs[i]) {
      if (!core[j]) continue;
      const double d = dist2(pts[i].p, pts[j].p);
      if (d < best_d || (d == best_d && label[j] < best)) {
        best_d = d;
        best = label[j];
      }
    }
    label[i] = best;
  }

  SpatialModel model;
  model.algorithm = Algorithm::dbscan;
  model.dbscan = params;
  for (std::size_t i = 0; i < n; ++i) model.assignment[pts[i].slot] = label[i];
  finish(model);
  return model;
}

SpatialModel single_area(const ingest::SlotLayout& layout) {
  SpatialModel model;
  model.algorithm = Algorithm::kmeans;
  model.kmeans.k = 1;
  for (const auto& s : layout) model.assignment[s.slot] = 0;
  finish(model);
  return model;
}

void write_model(const SpatialModel& model, const fs::path& csv_path) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw DataError("cannot write " + csv_path.string());
  out << "slot_id,cluster_id\n";
  for (const auto& [slot, c] : model.assignment)
    out << value(slot) << ',' << cluster_name(c) << '\n';
  if (!out) throw DataError("write failed: " + csv_path.string());

  nlohmann::ordered_json meta;
  meta["algorithm"] = model.algorithm == Algorithm::kmeans ? "kmeans" : "dbscan";
  if (model.algorithm == Algorithm::kmeans) {
    meta["k"] = model.kmeans.k;
    meta["seed"] = model.kmeans.seed;
    meta["max_iterations"] = model.kmeans.max_iterations;
    meta["n_init"] = model.kmeans.n_init;
    meta["iterations"] = model.iterations;
  } else {
    meta["eps"] = model.dbscan.eps;
    meta["min_samples"] = model.dbscan.min_samples;
  }
  std::vector<std::string> names;
  for (auto c : model.cluster_ids) names.push_back(cluster_name(c));
  meta["clusters"] = names;
  fs::path sidecar = csv_path;
  sidecar.replace_extension(".json");
  std::ofstream js(sidecar, std::ios::binary);
  if (!js) throw DataError("cannot write " + sidecar.string());
  js << meta.dump(2) << '\n';
}

SpatialModel read_model(const fs::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw DataError("cannot open " + csv_path.string());
  SpatialModel model;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (line_no == 1) {
      if (trim(line) != "slot_id,cluster_id")
        throw DataError(csv_path.string() + ": expected header slot_id,cluster_id", line_no);
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() != 2) throw DataError(csv_path.string() + ": expected 2 fields", line_no);
    const auto slot = parse_int(cols[0]);
    const std::string c = trim(cols[1]);
    const auto cid = c == "noise" ? std::optional<long long>(kNoise) : parse_int(c);
    if (!slot || !cid) throw DataError(csv_path.string() + ": malformed row", line_no);
    model.assignment[SlotId{static_cast<std::int32_t>(*slot)}] = static_cast<ClusterId>(*cid);
  }

  fs::path sidecar = csv_path;
  sidecar.replace_extension(".json");
  if (fs::exists(sidecar)) {
    std::ifstream js(sidecar);
    const auto meta = nlohmann::json::parse(js, nullptr, false);
    if (meta.is_discarded()) throw DataError("malformed sidecar " + sidecar.string());
    if (meta.value("algorithm", "kmeans") == "dbscan") {
      model.algorithm = Algorithm::dbscan;
      model.dbscan.eps = meta.value("eps", 50.0);
      model.dbscan.min_samples = meta.value("min_samples", 2);
    } else {
      model.kmeans.k = meta.value("k", 2);
      model.kmeans.seed = meta.value("seed", std::uint64_t{0});
      model.kmeans.max_iterations = meta.value("max_iterations", 300);
      model.kmeans.n_init = meta.value("n_init", 10);
      model.iterations = meta.value("iterations", 0);
    }
  }
  finish(model);
  return model;
}

}  // namespace parkcharge::spatial
