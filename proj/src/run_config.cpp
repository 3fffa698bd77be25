#include "parkcharge/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "parkcharge/common.hpp"
#include "parkcharge/features.hpp"

namespace parkcharge {

namespace {

const std::set<std::string>& plain_keys() {
  static const std::set<std::string> keys{
      "dataset",      "format",         "input",        "day_first",       "frames",
      "layout",       "events",         "spatial",      "model",           "tasks",
      "baseline",     "out",            "seed",         "jobs",            "scheme",
      "approaches",   "features",       "classifiers",  "regressors",      "split_ratio",
      "folds",        "gap_factor",     "min_slot_coverage", "algorithm",  "task",
      "spec",         "cluster_algorithm", "k",         "eps",             "min_samples",
      "dt",           "horizon",        "energy_kwh",   "pmax_kw",         "window_mode",
      "spatial_kmeans_k", "spatial_dbscan_eps", "spatial_dbscan_min_samples"};
  return keys;
}

template <class Fn>
void check(std::vector<std::string>& out, const std::string& key, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    out.push_back(key + ": " + e.what());
  }
}

long long as_int(const std::string& v, long long lo, long long hi) {
  const auto n = parse_int(v);
  if (!n) throw UsageError("expected an integer, got '" + v + "'");
  if (*n < lo || *n > hi)
    throw UsageError("value " + v + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return *n;
}

double as_double(const std::string& v) {
  const auto d = parse_double(v);
  if (!d) throw UsageError("expected a number, got '" + v + "'");
  return *d;
}

}  // namespace

std::vector<std::string> split_list(std::string_view text, char sep) {
  std::vector<std::string> out;
  for (const auto& part : split(text, sep)) {
    auto t = trim(part);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

RunConfig RunConfig::parse(std::string_view text, const std::string& source) {
  RunConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw UsageError(source + ":" + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw UsageError(source + ":" + std::to_string(line_no) + ": empty key");
    c.values_[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

std::optional<std::string> RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string RunConfig::get_or(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

std::string RunConfig::require(const std::string& key) const {
  const auto v = get(key);
  if (!v || v->empty()) throw UsageError("missing required setting '" + key + "'");
  return *v;
}

std::vector<std::string> RunConfig::problems() const {
  std::vector<std::string> out;
  for (const auto& [key, value] : values_) {
    if (key.starts_with("grid.")) {
      check(out, key, [&] {
        const auto rest = key.substr(5);
        const auto dot = rest.find('.');
        if (dot == std::string::npos) throw UsageError("expected grid.<algorithm>.<key>");
        const auto alg = learners::parse_algorithm(rest.substr(0, dot));
        learners::LearnerConfig probe;
        probe.algorithm = alg;
        probe.hyperparams[rest.substr(dot + 1)] = "";
        probe.validate();
        if (split_list(value).empty()) throw UsageError("empty grid");
      });
      continue;
    }
    if (key.starts_with("param.")) continue;
    if (!plain_keys().contains(key)) {
      out.push_back(key + ": unknown setting");
      continue;
    }
    if (key == "seed") check(out, key, [&] { as_int(value, 0, std::numeric_limits<long long>::max()); });
    if (key == "jobs") check(out, key, [&] { as_int(value, 0, 4096); });
    if (key == "folds") check(out, key, [&] { as_int(value, 2, 1000); });
    if (key == "k" || key == "min_samples") check(out, key, [&] { as_int(value, 1, 100000); });
    if (key == "horizon") check(out, key, [&] { as_int(value, 1, 1000000); });
    if (key == "dt") check(out, key, [&] {
      const auto d = as_int(value, 1, 60);
      if (60 % d != 0) throw UsageError("timeslot width must divide one hour");
    });
    if (key == "split_ratio") check(out, key, [&] {
      const double r = as_double(value);
      if (!(r > 0 && r < 1)) throw UsageError("must lie in (0, 1)");
    });
    if (key == "gap_factor" || key == "eps" || key == "energy_kwh" || key == "pmax_kw")
      check(out, key, [&] {
        if (!(as_double(value) > 0)) throw UsageError("must be positive");
      });
    if (key == "min_slot_coverage") check(out, key, [&] {
      const double r = as_double(value);
      if (!(r >= 0 && r <= 1)) throw UsageError("must lie in [0, 1]");
    });
    if (key == "scheme") check(out, key, [&] { events::ClassScheme::by_name(value); });
    if (key == "format") check(out, key, [&] {
      if (value != "cnr" && value != "pklot") throw UsageError("format must be cnr or pklot");
    });
    if (key == "approaches") check(out, key, [&] {
      for (const auto& a : split_list(value)) learners::parse_task(a);
    });
    if (key == "task") check(out, key, [&] { learners::parse_task(value); });
    if (key == "classifiers" || key == "regressors") check(out, key, [&] {
      for (const auto& a : split_list(value)) {
        const auto alg = learners::parse_algorithm(a);
        if (key == "regressors" && !learners::supports_regression(alg))
          throw UsageError(a + " cannot do regression");
        if (key == "classifiers" && !learners::is_probabilistic(alg))
          throw UsageError(a + " has no class probabilities");
      }
    });
    if (key == "algorithm") check(out, key, [&] { learners::parse_algorithm(value); });
    if (key == "features") check(out, key, [&] {
      for (const auto& s : split_list(value, ';')) features::FeatureSpec::parse(s);
    });
    if (key == "spec") check(out, key, [&] { features::FeatureSpec::parse(value); });
    if (key == "cluster_algorithm") check(out, key, [&] {
      if (value != "kmeans" && value != "dbscan") throw UsageError("must be kmeans or dbscan");
    });
    if (key == "window_mode") check(out, key, [&] { scheduler::parse_window_mode(value); });
    if (key == "spatial_kmeans_k" || key == "spatial_dbscan_min_samples") check(out, key, [&] {
      for (const auto& v : split_list(value)) as_int(v, 1, 100000);
    });
    if (key == "spatial_dbscan_eps") check(out, key, [&] {
      for (const auto& v : split_list(value))
        if (!(as_double(v) > 0)) throw UsageError("eps must be positive");
    });
  }
  if (const auto alg = get("algorithm")) {
    try {
      learners::LearnerConfig probe;
      probe.algorithm = learners::parse_algorithm(*alg);
      for (const auto& [key, value] : values_)
        if (key.starts_with("param.")) probe.hyperparams[key.substr(6)] = value;
      probe.validate();
    } catch (const std::exception& e) {
      out.push_back(std::string("param.*: ") + e.what());
    }
  }
  return out;
}

void RunConfig::validate() const {
  const auto p = problems();
  if (p.empty()) return;
  std::string msg = "invalid configuration (" + std::to_string(p.size()) + " problem" +
                    (p.size() == 1 ? "" : "s") + "):";
  for (const auto& m : p) msg += "\n  " + m;
  throw UsageError(msg);
}

std::uint64_t RunConfig::seed() const {
  return static_cast<std::uint64_t>(as_int(get_or("seed", "0"), 0, std::numeric_limits<long long>::max()));
}

int RunConfig::jobs() const { return static_cast<int>(as_int(get_or("jobs", "0"), 0, 4096)); }

std::filesystem::path RunConfig::out_dir() const { return require("out"); }

harness::ExperimentPlan RunConfig::experiment_plan() const {
  harness::ExperimentPlan plan;
  plan.dataset_id = get_or("dataset", plan.dataset_id);
  plan.scheme = events::ClassScheme::by_name(get_or("scheme", "low"));
  if (const auto a = get("approaches")) {
    plan.approaches.clear();
    for (const auto& t : split_list(*a)) plan.approaches.push_back(learners::parse_task(t));
  }
  if (const auto f = get("features")) plan.feature_specs = split_list(*f, ';');
  if (const auto c = get("classifiers")) {
    plan.classifiers.clear();
    for (const auto& t : split_list(*c)) plan.classifiers.push_back(learners::parse_algorithm(t));
  }
  if (const auto r = get("regressors")) {
    plan.regressors.clear();
    for (const auto& t : split_list(*r)) plan.regressors.push_back(learners::parse_algorithm(t));
  }
  std::map<learners::Algorithm, std::map<std::string, std::vector<std::string>>> axes;
  for (const auto& [key, value] : values_) {
    if (!key.starts_with("grid.")) continue;
    const auto rest = key.substr(5);
    const auto dot = rest.find('.');
    axes[learners::parse_algorithm(rest.substr(0, dot))][rest.substr(dot + 1)] = split_list(value);
  }
  for (const auto& [alg, keys] : axes) {
    // Keys the config leaves out keep their default values.
    harness::Grid grid = harness::default_grid(alg);
    for (const auto& [key, vals] : keys) {
      harness::Grid next;
      std::set<std::map<std::string, std::string>> seen;
      for (auto point : grid) {
        point.erase(key);
        if (!seen.insert(point).second) continue;
        for (const auto& v : vals) {
          auto p = point;
          p[key] = v;
          next.push_back(std::move(p));
        }
      }
      grid = std::move(next);
    }
    plan.grids[alg] = std::move(grid);
  }
  plan.seed = seed();
  plan.jobs = jobs();
  plan.split_ratio = as_double(get_or("split_ratio", "0.8"));
  plan.folds = static_cast<int>(as_int(get_or("folds", "5"), 2, 1000));
  const auto km = get("spatial_kmeans_k");
  const auto eps = get("spatial_dbscan_eps");
  const auto ms = get("spatial_dbscan_min_samples");
  if (km || eps || ms) {
    for (const auto& k : split_list(km.value_or(""))) {
      harness::SpatialCandidate c;
      c.algorithm = spatial::Algorithm::kmeans;
      c.kmeans.k = static_cast<int>(as_int(k, 1, 100000));
      c.kmeans.seed = plan.seed;
      plan.spatial_grid.push_back(c);
    }
    const auto eps_list = split_list(eps.value_or(""));
    const auto ms_list = split_list(ms.value_or(""));
    for (const auto& e : eps_list)
      for (const auto& m : ms_list.empty() ? std::vector<std::string>{"2"} : ms_list) {
        harness::SpatialCandidate c;
        c.algorithm = spatial::Algorithm::dbscan;
        c.dbscan.eps = as_double(e);
        c.dbscan.min_samples = static_cast<int>(as_int(m, 1, 100000));
        plan.spatial_grid.push_back(c);
      }
    if (plan.spatial_grid.empty()) throw UsageError("spatial grid settings produce no candidate");
  }
  return plan;
}

learners::LearnerConfig RunConfig::learner_config() const {
  learners::LearnerConfig c;
  c.algorithm = learners::parse_algorithm(require("algorithm"));
  c.task = learners::parse_task(get_or("task", "classification"));
  for (const auto& [key, value] : values_)
    if (key.starts_with("param.")) c.hyperparams[key.substr(6)] = value;
  c.seed = seed();
  c.validate();
  return c;
}

scheduler::ChargerParams RunConfig::charger_params() const {
  scheduler::ChargerParams p;
  p.energy_kwh = as_double(get_or("energy_kwh", format_double(p.energy_kwh)));
  p.pmax_kw = as_double(get_or("pmax_kw", format_double(p.pmax_kw)));
  p.slot_minutes = static_cast<int>(as_int(get_or("dt", "15"), 1, 60));
  p.mode = scheduler::parse_window_mode(get_or("window_mode", "lower"));
  return p;
}

}  // namespace parkcharge
