#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "parkcharge/common.hpp"
#include "parkcharge/events.hpp"
#include "parkcharge/features.hpp"
#include "parkcharge/harness.hpp"
#include "parkcharge/ingest.hpp"
#include "parkcharge/learners/model.hpp"
#include "parkcharge/run_config.hpp"
#include "parkcharge/scheduler.hpp"
#include "parkcharge/spatial.hpp"

namespace fs = std::filesystem;
using namespace parkcharge;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

void log(const std::string& msg) { std::cerr << "parkcharge: " << msg << '\n'; }

void log_warnings(const std::vector<Warning>& warnings) {
  for (const auto& w : warnings)
    log("warning: " + w.source + (w.line ? ":" + std::to_string(w.line) : "") + ": " + w.reason);
}

// Flag values collected during parsing; they win over config-file values.
struct Flags {
  std::optional<std::string> config;
  std::map<std::string, std::string> values;
  std::vector<std::string> params;
};

void flag(CLI::App* cmd, Flags& f, const std::string& name, const std::string& key,
          const std::string& help) {
  cmd->add_option_function<std::string>(
      name, [&f, key](const std::string& v) { f.values[key] = v; }, help);
}

void common_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option_function<std::string>(
      "--config", [&f](const std::string& v) { f.config = v; }, "key = value run configuration file");
  flag(cmd, f, "--out", "out", "output directory");
  flag(cmd, f, "--seed", "seed", "random seed");
  flag(cmd, f, "--jobs", "jobs", "worker threads (0 = all cores)");
}

void data_flags(CLI::App* cmd, Flags& f) {
  flag(cmd, f, "--events", "events", "events.csv from extract-events");
  flag(cmd, f, "--frames", "frames", "canonical frames.csv");
  flag(cmd, f, "--layout", "layout", "canonical layout.csv");
  flag(cmd, f, "--scheme", "scheme", "class scheme: low or high");
  flag(cmd, f, "--split-ratio", "split_ratio", "train fraction of the time-ordered split");
}

RunConfig resolve(const Flags& f) {
  RunConfig c = f.config ? RunConfig::load(*f.config) : RunConfig{};
  if (const char* env = std::getenv(kOutEnv); env && *env) c.set("out", env);
  for (const auto& [k, v] : f.values) c.set(k, v);
  for (const auto& p : f.params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw UsageError("--param expects key=value, got '" + p + "'");
    c.set("param." + trim(std::string_view(p).substr(0, eq)), trim(std::string_view(p).substr(eq + 1)));
  }
  c.validate();
  return c;
}

fs::path prepare_out(const RunConfig& c) {
  const fs::path out = c.out_dir();
  fs::create_directories(out);
  return out;
}

fs::path input(const RunConfig& c, const std::string& key) {
  const fs::path p = c.require(key);
  if (!fs::exists(p)) throw DataError("input file not found: " + p.string());
  return p;
}

struct Dataset {
  std::vector<ingest::OccupancyFrame> frames;
  ingest::SlotLayout layout;
  std::vector<events::ParkingEvent> events;
};

Dataset load_dataset(const RunConfig& c) {
  Dataset d;
  d.frames = ingest::read_frames(input(c, "frames"));
  d.layout = ingest::read_layout(input(c, "layout"));
  d.events = events::read_events(input(c, "events"));
  return d;
}

std::set<SlotId> slot_universe(const Dataset& d) {
  std::set<SlotId> u;
  for (const auto& s : d.layout) u.insert(s.slot);
  for (const auto& e : d.events) u.insert(e.slot);
  return u;
}

features::FeatureSpec resolve_spec(const RunConfig& c, const std::string& text) {
  auto spec = features::FeatureSpec::parse(text);
  if (spec.use_spt || spec.use_ocy) {
    const auto path = c.get("spatial");
    if (!path) throw UsageError("feature spec '" + text + "' needs --spatial (from the cluster command)");
    if (!fs::exists(*path)) throw DataError("input file not found: " + *path);
    spec.spatial = std::make_shared<spatial::SpatialModel>(spatial::read_model(*path));
  }
  spec.validate();
  return spec;
}

int cmd_ingest(const RunConfig& c) {
  const std::string format = c.require("format");
  const fs::path in = c.require("input");
  if (!fs::exists(in)) throw DataError("input not found: " + in.string());
  ingest::ParseResult r;
  if (format == "cnr") {
    ingest::CnrOptions o;
    o.dataset = c.get_or("dataset", o.dataset);
    if (c.get_or("day_first", "true") == "false") o.date_order = ingest::DateOrder::month_first;
    r = ingest::parse_cnr_csv(in, o);
  } else {
    ingest::PklotOptions o;
    if (const auto d = c.get("dataset")) o.dataset = *d;
    r = ingest::parse_pklot_xml(in, o);
  }
  if (const auto geo = c.get("layout")) r.layout = ingest::merge_layout(ingest::read_layout(*geo), r.layout);
  log_warnings(r.warnings);
  const auto out = prepare_out(c);
  const auto paths = ingest::write_canonical(r.frames, r.layout, out);
  std::cout << r.frames.size() << " frames, " << r.layout.size() << " slots, " << r.warnings.size()
            << " warnings\n"
            << "wrote " << paths.frames.string() << " and " << paths.layout.string() << '\n';
  return kOk;
}

int cmd_extract(const RunConfig& c) {
  auto frames = ingest::read_frames(input(c, "frames"));
  std::vector<Warning> warnings;
  ingest::normalize_frames(frames, &warnings);
  log_warnings(warnings);
  events::ExtractOptions eo;
  eo.gap_factor = std::stod(c.get_or("gap_factor", "2"));
  const auto all = events::extract_events(frames, eo);
  events::CleanOptions co;
  co.min_slot_coverage = std::stod(c.get_or("min_slot_coverage", "0.5"));
  if (const auto layout = c.get("layout")) co.total_slots = ingest::read_layout(*layout).size();
  const auto cleaned = events::clean_events(all, frames, co);
  const auto out = prepare_out(c);
  events::write_events(out / "events_all.csv", all);
  events::write_events(out / "events.csv", cleaned);
  std::size_t partial = 0;
  for (const auto& e : all) partial += e.partial ? 1 : 0;
  std::cout << all.size() << " events extracted, " << partial << " partial, " << cleaned.size()
            << " kept after cleaning\n";
  for (const auto& scheme : {events::ClassScheme::low(), events::ClassScheme::high()}) {
    const auto labeled = events::label_events(cleaned, scheme);
    std::vector<int> y;
    for (const auto& l : labeled) y.push_back(l.label);
    if (y.empty()) continue;
    const auto d = events::class_distribution_entropy(y, scheme.num_classes());
    std::cout << scheme.name() << " scheme:";
    for (std::size_t i = 0; i < d.frequencies.size(); ++i)
      std::cout << ' ' << scheme.labels()[i] << '=' << format_double(std::round(d.frequencies[i] * 1000) / 1000);
    std::cout << " entropy=" << format_double(std::round(d.entropy * 1000) / 1000) << '\n';
  }
  return kOk;
}

int cmd_cluster(const RunConfig& c) {
  const auto layout = ingest::read_layout(input(c, "layout"));
  const std::string alg = c.get_or("cluster_algorithm", "kmeans");
  spatial::SpatialModel m;
  if (alg == "kmeans") {
    spatial::KMeansParams p;
    p.k = std::stoi(c.get_or("k", "4"));
    p.seed = c.seed();
    m = spatial::kmeans_fit(layout, p);
  } else {
    spatial::DbscanParams p;
    p.eps = std::stod(c.get_or("eps", "50"));
    p.min_samples = std::stoi(c.get_or("min_samples", "2"));
    m = spatial::dbscan_fit(layout, p);
  }
  const auto out = prepare_out(c);
  spatial::write_model(m, out / "spatial.csv");
  std::cout << m.describe() << ": " << m.cluster_ids.size() << " areas over " << m.assignment.size()
            << " slots\n";
  return kOk;
}

int cmd_features(const RunConfig& c) {
  const auto d = load_dataset(c);
  const auto scheme = events::ClassScheme::by_name(c.get_or("scheme", "low"));
  const auto spec = resolve_spec(c, c.get_or("spec", "all"));
  const features::FrameIndex index(d.frames);
  const auto labeled = events::label_events(d.events, scheme);
  const auto m = features::build_matrix(labeled, spec, index, slot_universe(d), scheme.num_classes());
  if (m.empty_cluster_warnings) log("warning: " + std::to_string(m.empty_cluster_warnings) + " empty-area occupancy lookups");
  const auto out = prepare_out(c);
  features::write_matrix(m, spec, out / "features.csv");
  std::cout << m.x.rows() << " rows, " << m.columns.size() << " columns (" << spec.name() << ")\n";
  return kOk;
}

struct SplitMatrices {
  features::FeatureMatrix train;
  features::FeatureMatrix test;
  std::vector<events::LabeledEvent> test_events;
};

SplitMatrices split_matrices(const RunConfig& c, const Dataset& d, const events::ClassScheme& scheme,
                             const features::FeatureSpec& spec) {
  const auto labeled = events::label_events(d.events, scheme);
  const auto split = harness::time_ordered_split(labeled, std::stod(c.get_or("split_ratio", "0.8")));
  const features::FrameIndex index(d.frames);
  const auto universe = slot_universe(d);
  SplitMatrices s;
  s.train = features::build_matrix(split.train, spec, index, universe, scheme.num_classes());
  s.test = features::build_matrix(split.test, spec, index, universe, scheme.num_classes());
  s.test_events = split.test;
  return s;
}

int cmd_train(const RunConfig& c) {
  const auto d = load_dataset(c);
  const auto scheme = events::ClassScheme::by_name(c.get_or("scheme", "low"));
  const std::string spec_text = c.get_or("spec", "all");
  const auto spec = resolve_spec(c, spec_text);
  const auto config = c.learner_config();
  const auto m = split_matrices(c, d, scheme, spec);
  auto model = learners::fit(config, m.train);
  model.metadata["feature_spec"] = spec.name();
  model.metadata["scheme"] = scheme.name();
  if (const auto sp = c.get("spatial")) model.metadata["spatial"] = fs::path(*sp).filename().string();
  for (const auto& w : model.warnings) log("warning: " + w);
  const auto out = prepare_out(c);
  learners::save_model(model, out / "model.json");
  const auto pred = learners::predict_classes(model, m.test);
  const auto mt = harness::metrics(m.test.targets, pred, scheme.num_classes());
  std::cout << config.describe() << " " << learners::to_string(config.task) << " on " << m.train.x.rows()
            << " events; test MAE " << format_double(std::round(mt.mae * 1000) / 1000) << ", micro-F1 "
            << format_double(std::round(mt.micro_f1 * 1000) / 1000) << '\n';
  return kOk;
}

int cmd_evaluate(const RunConfig& c) {
  const auto d = load_dataset(c);
  const auto plan = c.experiment_plan();
  harness::ExperimentData data{d.frames, d.layout, d.events};
  const auto report = harness::run_experiment(plan, data);
  for (const auto& w : report.warnings) log("warning: " + w);
  const auto out = prepare_out(c);
  harness::write_report(plan, report, out);
  std::cout << format_table(report);
  return kOk;
}

std::pair<learners::TrainedModel, events::ClassScheme> load_trained(const RunConfig& c) {
  auto model = learners::load_model(input(c, "model"));
  const auto scheme = events::ClassScheme::by_name(
      model.metadata.contains("scheme") ? model.metadata.at("scheme") : c.get_or("scheme", "low"));
  return {std::move(model), scheme};
}

int cmd_importance(const RunConfig& c) {
  const auto d = load_dataset(c);
  const auto [model, scheme] = load_trained(c);
  const auto spec = resolve_spec(c, model.metadata.contains("feature_spec") ? model.metadata.at("feature_spec")
                                                                              : c.get_or("spec", "all"));
  const auto m = split_matrices(c, d, scheme, spec);
  const auto imp = learners::feature_importance(model, &m.test, c.seed());
  const auto out = prepare_out(c);
  std::ofstream csv(out / "importance.csv", std::ios::binary);
  if (!csv) throw DataError("cannot write " + (out / "importance.csv").string());
  const std::vector<std::pair<std::string, std::string>> cols{
      {"h", "h"}, {"tm", "m"}, {"dw", "dw"}, {"s", "s"}, {"wr", "wr"}, {"spt", "spt"}, {"ocy", "ocy"}};
  csv << "algorithm,method";
  for (const auto& [name, group] : cols) csv << ',' << name;
  csv << '\n' << learners::to_string(model.config.algorithm) << ',' << imp.method;
  for (const auto& [name, group] : cols) {
    const auto it = imp.score.find(group);
    csv << ',' << (it != imp.score.end() ? format_double(it->second) : "");
    std::cout << name << '\t'
              << (it != imp.score.end() ? format_double(std::round(it->second * 1000) / 1000) : "-") << '\n';
  }
  csv << '\n';
  return kOk;
}

int cmd_schedule(const RunConfig& c) {
  const auto tasks = scheduler::read_tasks(input(c, "tasks"));
  const int minutes = std::stoi(c.get_or("dt", "15"));
  const double dt = minutes / 60.0;
  std::vector<double> baseline;
  if (c.get("baseline")) baseline = scheduler::read_baseline(input(c, "baseline"));
  int horizon = 0;
  if (const auto h = c.get("horizon")) {
    horizon = std::stoi(*h);
  } else if (!baseline.empty()) {
    horizon = static_cast<int>(baseline.size());
  } else {
    for (const auto& t : tasks) horizon = std::max(horizon, t.window_end);
  }
  if (horizon <= 0) throw DataError("cannot infer a horizon from an empty task list; pass --horizon");
  const auto plan = scheduler::schedule(tasks, horizon, baseline, dt);
  const auto naive = scheduler::charge_on_arrival(tasks, horizon, baseline, dt);
  const auto out = prepare_out(c);
  scheduler::write_plan(out / "plan.csv", plan);
  scheduler::write_summary(out / "summary.json", plan, naive, tasks);
  std::cout << tasks.size() << " tasks over " << horizon << " slots of " << minutes << " min: peak "
            << format_double(std::round(plan.peak * 1000) / 1000) << " kW, PAR "
            << (plan.par ? format_double(std::round(*plan.par * 10000) / 10000) : "-")
            << " (charge on arrival: "
            << (naive.par ? format_double(std::round(*naive.par * 10000) / 10000) : "-") << ")\n";
  return kOk;
}

int cmd_simulate(const RunConfig& c) {
  const auto d = load_dataset(c);
  const auto [model, scheme] = load_trained(c);
  const auto spec = resolve_spec(c, model.metadata.contains("feature_spec") ? model.metadata.at("feature_spec")
                                                                              : c.get_or("spec", "all"));
  const auto m = split_matrices(c, d, scheme, spec);
  const auto pred = learners::predict_classes(model, m.test);
  std::vector<events::ParkingEvent> ev;
  for (const auto& l : m.test_events) ev.push_back(l.event);
  const auto report = scheduler::simulate(ev, pred, scheme, c.charger_params());
  const auto out = prepare_out(c);
  scheduler::write_fleet_report(out / "simulation.json", report);
  for (const auto& day : report.days)
    std::cout << day.date << ": " << day.tasks << " cars, peak "
              << format_double(std::round(day.peak_kw * 100) / 100) << " kW, PAR "
              << (day.par ? format_double(std::round(*day.par * 1000) / 1000) : "-") << " vs "
              << (day.arrival_par ? format_double(std::round(*day.arrival_par * 1000) / 1000) : "-")
              << " charging on arrival\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parking-duration prediction and EV charge scheduling"};
  app.require_subcommand(1);
  Flags f;

  auto* ingest_cmd = app.add_subcommand("ingest", "parse raw occupancy data into frames.csv and layout.csv");
  common_flags(ingest_cmd, f);
  flag(ingest_cmd, f, "--format", "format", "cnr or pklot");
  flag(ingest_cmd, f, "--in", "input", "CNR csv file or PKLot directory");
  flag(ingest_cmd, f, "--dataset", "dataset", "dataset id");
  flag(ingest_cmd, f, "--layout", "layout", "optional slot_id,x,y geometry to merge");
  ingest_cmd->add_flag_callback("--month-first", [&f] { f.values["day_first"] = "false"; },
                                "CNR dates are month/day/year");

  auto* extract_cmd = app.add_subcommand("extract-events", "rebuild and clean parking events");
  common_flags(extract_cmd, f);
  flag(extract_cmd, f, "--frames", "frames", "canonical frames.csv");
  flag(extract_cmd, f, "--layout", "layout", "canonical layout.csv (sets the lot size)");
  flag(extract_cmd, f, "--gap-factor", "gap_factor", "monitoring gap multiple of the median cadence");
  flag(extract_cmd, f, "--min-coverage", "min_slot_coverage", "minimum reporting slot fraction per day");

  auto* cluster_cmd = app.add_subcommand("cluster", "split the lot into areas");
  common_flags(cluster_cmd, f);
  flag(cluster_cmd, f, "--layout", "layout", "canonical layout.csv");
  flag(cluster_cmd, f, "--algorithm", "cluster_algorithm", "kmeans or dbscan");
  flag(cluster_cmd, f, "--k", "k", "kmeans cluster count");
  flag(cluster_cmd, f, "--eps", "eps", "dbscan radius");
  flag(cluster_cmd, f, "--min-samples", "min_samples", "dbscan core size");

  auto* features_cmd = app.add_subcommand("features", "encode events as a feature matrix");
  common_flags(features_cmd, f);
  data_flags(features_cmd, f);
  flag(features_cmd, f, "--spec", "spec", "feature spec, e.g. all+spt+ocy");
  flag(features_cmd, f, "--spatial", "spatial", "spatial.csv from cluster");

  auto* train_cmd = app.add_subcommand("train", "fit one model on the training split");
  common_flags(train_cmd, f);
  data_flags(train_cmd, f);
  flag(train_cmd, f, "--spec", "spec", "feature spec");
  flag(train_cmd, f, "--spatial", "spatial", "spatial.csv from cluster");
  flag(train_cmd, f, "--algorithm", "algorithm", "learner");
  flag(train_cmd, f, "--task", "task", "classification, ordinal or regression");
  train_cmd->add_option("--param", f.params, "hyperparameter key=value (repeatable)");

  auto* eval_cmd = app.add_subcommand("evaluate", "grid-search every learner and compare with baselines");
  common_flags(eval_cmd, f);
  data_flags(eval_cmd, f);
  flag(eval_cmd, f, "--approaches", "approaches", "comma list of tasks");
  flag(eval_cmd, f, "--features", "features", "';' separated feature specs");
  flag(eval_cmd, f, "--classifiers", "classifiers", "comma list of learners");
  flag(eval_cmd, f, "--regressors", "regressors", "comma list of learners");
  flag(eval_cmd, f, "--folds", "folds", "cross-validation folds");
  flag(eval_cmd, f, "--dataset", "dataset", "dataset id for the report");

  auto* imp_cmd = app.add_subcommand("importance", "relative feature importance of a trained model");
  common_flags(imp_cmd, f);
  data_flags(imp_cmd, f);
  flag(imp_cmd, f, "--model", "model", "model.json from train");
  flag(imp_cmd, f, "--spatial", "spatial", "spatial.csv used at training time");

  auto* sched_cmd = app.add_subcommand("schedule", "minimum-peak charging plan");
  common_flags(sched_cmd, f);
  flag(sched_cmd, f, "--tasks", "tasks", "tasks.csv");
  flag(sched_cmd, f, "--dt", "dt", "timeslot width in minutes");
  flag(sched_cmd, f, "--horizon", "horizon", "timeslots (default: last window end)");
  flag(sched_cmd, f, "--baseline", "baseline", "timeslot,load_kw csv");

  auto* sim_cmd = app.add_subcommand("simulate", "schedule predicted test-split arrivals day by day");
  common_flags(sim_cmd, f);
  data_flags(sim_cmd, f);
  flag(sim_cmd, f, "--model", "model", "model.json from train");
  flag(sim_cmd, f, "--spatial", "spatial", "spatial.csv used at training time");
  flag(sim_cmd, f, "--dt", "dt", "timeslot width in minutes");
  flag(sim_cmd, f, "--energy-kwh", "energy_kwh", "energy demand per car");
  flag(sim_cmd, f, "--pmax-kw", "pmax_kw", "charger power");
  flag(sim_cmd, f, "--window-mode", "window_mode", "lower, midpoint or upper");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    const RunConfig c = resolve(f);
    if (ingest_cmd->parsed()) return cmd_ingest(c);
    if (extract_cmd->parsed()) return cmd_extract(c);
    if (cluster_cmd->parsed()) return cmd_cluster(c);
    if (features_cmd->parsed()) return cmd_features(c);
    if (train_cmd->parsed()) return cmd_train(c);
    if (eval_cmd->parsed()) return cmd_evaluate(c);
    if (imp_cmd->parsed()) return cmd_importance(c);
    if (sched_cmd->parsed()) return cmd_schedule(c);
    if (sim_cmd->parsed()) return cmd_simulate(c);
  } catch (const UsageError& e) {
    log(std::string("usage error: ") + e.what());
    return kUsage;
  } catch (const DataError& e) {
    log(std::string("data error: ") + e.what());
    return kData;
  } catch (const std::exception& e) {
    log(std::string("internal error: ") + e.what());
    return kInternal;
  }
  return kInternal;
}
