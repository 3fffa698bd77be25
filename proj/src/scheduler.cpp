#include "parkcharge/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include "json.hpp"
#include "parkcharge/common.hpp"

namespace parkcharge::scheduler {

namespace {

// Dinic's algorithm on real capacities.
class MaxFlow {
public:
  explicit MaxFlow(std::size_t n) : graph_(n), level_(n), iter_(n) {}

  std::size_t add_edge(std::size_t from, std::size_t to, double cap) {
    graph_[from].push_back({to, graph_[to].size(), cap, cap});
    graph_[to].push_back({from, graph_[from].size() - 1, 0.0, 0.0});
    return graph_[from].size() - 1;
  }

  double run(std::size_t s, std::size_t t, double eps) {
    eps_ = eps;
    double total = 0;
    while (bfs(s, t)) {
      std::fill(iter_.begin(), iter_.end(), 0);
      for (double f; (f = dfs(s, t, std::numeric_limits<double>::infinity())) > eps_;) total += f;
    }
    return total;
  }

  double flow_on(std::size_t from, std::size_t edge) const {
    const auto& e = graph_[from][edge];
    return e.original - e.cap;
  }

private:
  struct Edge {
    std::size_t to;
    std::size_t rev;
    double cap;
    double original;
  };

  bool bfs(std::size_t s, std::size_t t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::vector<std::size_t> queue{s};
    level_[s] = 0;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const auto v = queue[q];
      for (const auto& e : graph_[v])
        if (e.cap > eps_ && level_[e.to] < 0) {
          level_[e.to] = level_[v] + 1;
          queue.push_back(e.to);
        }
    }
    return level_[t] >= 0;
  }

  double dfs(std::size_t v, std::size_t t, double pushed) {
    if (v == t) return pushed;
    for (auto& i = iter_[v]; i < graph_[v].size(); ++i) {
      auto& e = graph_[v][i];
      if (e.cap <= eps_ || level_[e.to] != level_[v] + 1) continue;
      const double d = dfs(e.to, t, std::min(pushed, e.cap));
      if (d > eps_) {
        e.cap -= d;
        graph_[e.to][e.rev].cap += d;
        return d;
      }
    }
    return 0.0;
  }

  std::vector<std::vector<Edge>> graph_;
  std::vector<int> level_;
  std::vector<std::size_t> iter_;
  double eps_ = 0.0;
};

double baseline_at(std::span<const double> baseline, std::size_t t) {
  return baseline.empty() ? 0.0 : baseline[t];
}

struct FlowResult {
  double flow = 0.0;
  double need = 0.0;
  Matrix energy;  // task x slot, kWh
};

FlowResult solve_flow(std::span<const ChargingTask> tasks, int horizon,
                      std::span<const double> baseline, double dt, double cap) {
  const std::size_t n = tasks.size();
  const auto T = static_cast<std::size_t>(horizon);
  const std::size_t source = 0, sink = n + T + 1;
  MaxFlow g(n + T + 2);
  FlowResult r;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> task_edges(n);
  double scale = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = deliverable(tasks[i], dt);
    r.need += e;
    scale = std::max(scale, e);
    g.add_edge(source, 1 + i, e);
    for (int t = tasks[i].arrival; t < tasks[i].window_end; ++t) {
      const auto slot = static_cast<std::size_t>(t);
      task_edges[i].push_back({slot, g.add_edge(1 + i, 1 + n + slot, tasks[i].pmax_kw * dt)});
    }
  }
  for (std::size_t t = 0; t < T; ++t)
    g.add_edge(1 + n + t, sink, std::max(0.0, cap - baseline_at(baseline, t)) * dt);
  r.flow = g.run(source, sink, 1e-12 * std::max(1.0, scale));
  r.energy = Matrix(n, T);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& [slot, edge] : task_edges[i]) r.energy(i, slot) = g.flow_on(1 + i, edge);
  return r;
}

bool enough(const FlowResult& r) { return r.flow >= r.need - 1e-9 * std::max(1.0, r.need); }

SchedulePlan make_plan(std::span<const ChargingTask> tasks, int horizon,
                       std::span<const double> baseline, double dt) {
  SchedulePlan plan;
  plan.horizon = horizon;
  plan.dt_hours = dt;
  for (const auto& t : tasks) plan.task_ids.push_back(t.id);
  plan.allocation = Matrix(tasks.size(), static_cast<std::size_t>(horizon));
  plan.baseline.assign(baseline.begin(), baseline.end());
  plan.delivered_kwh.assign(tasks.size(), 0.0);
  return plan;
}

void finish(SchedulePlan& plan) {
  const auto load = plan.aggregate();
  plan.peak = load.empty() ? 0.0 : *std::max_element(load.begin(), load.end());
  const double total = std::accumulate(load.begin(), load.end(), 0.0);
  if (total > 0) plan.par = par(load);
}

}  // namespace

std::vector<double> SchedulePlan::aggregate() const {
  std::vector<double> load(static_cast<std::size_t>(horizon), 0.0);
  for (std::size_t t = 0; t < load.size(); ++t) {
    load[t] = baseline.empty() ? 0.0 : baseline[t];
    for (std::size_t i = 0; i < allocation.rows(); ++i) load[t] += allocation(i, t);
  }
  return load;
}

WindowMode parse_window_mode(std::string_view text) {
  const std::string t = to_lower(trim(text));
  if (t == "lower") return WindowMode::lower;
  if (t == "midpoint") return WindowMode::midpoint;
  if (t == "upper") return WindowMode::upper;
  throw UsageError("window mode must be lower, midpoint or upper, got '" + t + "'");
}

int window_minutes(int predicted_class, const events::ClassScheme& scheme, WindowMode mode) {
  const auto& b = scheme.boundaries();
  const int k = scheme.num_classes();
  if (predicted_class < 0 || predicted_class >= k)
    throw UsageError("predicted class " + std::to_string(predicted_class) + " outside the scheme");
  const auto c = static_cast<std::size_t>(predicted_class);
  if (predicted_class == k - 1) return b.back();
  const int lo = c == 0 ? 0 : b[c - 1];
  const int hi = b[c];
  switch (mode) {
    case WindowMode::lower: return c == 0 ? b[0] : lo;
    case WindowMode::midpoint: return (lo + hi) / 2;
    case WindowMode::upper: return hi;
  }
  return lo;
}

Window window_from_prediction(TimePoint arrival, int predicted_class,
                              const events::ClassScheme& scheme, int slot_minutes,
                              TimePoint origin, WindowMode mode) {
  if (slot_minutes <= 0 || 60 % slot_minutes != 0)
    throw UsageError("timeslot width must divide one hour evenly");
  const auto offset = (arrival - origin).count();
  if (offset < 0) throw UsageError("arrival precedes the schedule origin");
  Window w;
  w.arrival = static_cast<int>(offset / slot_minutes);
  w.window_end = w.arrival + std::max(1, window_minutes(predicted_class, scheme, mode) / slot_minutes);
  return w;
}

double par(std::span<const double> load) {
  const double total = std::accumulate(load.begin(), load.end(), 0.0);
  if (load.empty() || !(total > 0)) throw DataError("PAR is undefined for zero total load");
  const double peak = *std::max_element(load.begin(), load.end());
  return peak / (total / static_cast<double>(load.size()));
}

double par(const SchedulePlan& plan) { return par(plan.aggregate()); }

double deliverable(const ChargingTask& task, double dt_hours) {
  return std::min(task.energy_kwh, task.pmax_kw * (task.window_end - task.arrival) * dt_hours);
}

void validate_tasks(std::span<const ChargingTask> tasks, int horizon,
                    std::span<const double> baseline) {
  if (horizon <= 0) throw DataError("horizon must be positive");
  if (!baseline.empty() && baseline.size() != static_cast<std::size_t>(horizon))
    throw DataError("baseline has " + std::to_string(baseline.size()) + " slots, horizon is " +
                    std::to_string(horizon));
  for (double b : baseline)
    if (!(b >= 0) || !std::isfinite(b)) throw DataError("baseline load must be finite and >= 0");
  for (const auto& t : tasks) {
    if (t.arrival < 0 || t.window_end > horizon)
      throw DataError("task " + t.id + " window [" + std::to_string(t.arrival) + ", " +
                      std::to_string(t.window_end) + ") lies outside [0, " +
                      std::to_string(horizon) + ")");
    if (t.window_end <= t.arrival) throw DataError("task " + t.id + " has an empty window");
    if (!(t.energy_kwh >= 0) || !std::isfinite(t.energy_kwh))
      throw DataError("task " + t.id + " energy must be >= 0");
    if (!(t.pmax_kw > 0) || !std::isfinite(t.pmax_kw))
      throw DataError("task " + t.id + " p_max must be > 0");
  }
}

bool is_feasible(std::span<const ChargingTask> tasks, int horizon,
                 std::span<const double> baseline, double dt_hours, double cap) {
  validate_tasks(tasks, horizon, baseline);
  for (std::size_t t = 0; t < static_cast<std::size_t>(horizon); ++t)
    if (baseline_at(baseline, t) > cap) return false;
  return enough(solve_flow(tasks, horizon, baseline, dt_hours, cap));
}

SchedulePlan schedule(std::span<const ChargingTask> tasks, int horizon,
                      std::span<const double> baseline, double dt_hours) {
  if (!(dt_hours > 0)) throw UsageError("timeslot width must be positive");
  validate_tasks(tasks, horizon, baseline);
  SchedulePlan plan = make_plan(tasks, horizon, baseline, dt_hours);
  const auto T = static_cast<std::size_t>(horizon);
  double max_base = 0, sum_base = 0, need = 0;
  for (std::size_t t = 0; t < T; ++t) {
    max_base = std::max(max_base, baseline_at(baseline, t));
    sum_base += baseline_at(baseline, t);
  }
  for (const auto& task : tasks) need += deliverable(task, dt_hours);
  if (need > 0) {
    double lo = std::max(max_base, (sum_base + need / dt_hours) / static_cast<double>(T));
    std::vector<double> stacked(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) stacked[t] = baseline_at(baseline, t);
    for (const auto& task : tasks)
      for (int t = task.arrival; t < task.window_end; ++t) stacked[static_cast<std::size_t>(t)] += task.pmax_kw;
    double hi = *std::max_element(stacked.begin(), stacked.end());
    FlowResult best = solve_flow(tasks, horizon, baseline, dt_hours, lo);
    if (!enough(best)) {
      best = solve_flow(tasks, horizon, baseline, dt_hours, hi);
      while (hi - lo >= 1e-6 * hi) {
        const double mid = 0.5 * (lo + hi);
        auto r = solve_flow(tasks, horizon, baseline, dt_hours, mid);
        if (enough(r)) {
          hi = mid;
          best = std::move(r);
        } else {
          lo = mid;
        }
      }
    }
    for (std::size_t i = 0; i < tasks.size(); ++i)
      for (std::size_t t = 0; t < T; ++t) {
        const double kwh = best.energy(i, t);
        plan.allocation(i, t) = std::min(tasks[i].pmax_kw, kwh / dt_hours);
        plan.delivered_kwh[i] += kwh;
      }
  }
  finish(plan);
  return plan;
}

SchedulePlan charge_on_arrival(std::span<const ChargingTask> tasks, int horizon,
                               std::span<const double> baseline, double dt_hours) {
  if (!(dt_hours > 0)) throw UsageError("timeslot width must be positive");
  validate_tasks(tasks, horizon, baseline);
  SchedulePlan plan = make_plan(tasks, horizon, baseline, dt_hours);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    double remaining = deliverable(tasks[i], dt_hours);
    for (int t = tasks[i].arrival; t < tasks[i].window_end && remaining > 0; ++t) {
      const double p = std::min(tasks[i].pmax_kw, remaining / dt_hours);
      plan.allocation(i, static_cast<std::size_t>(t)) = p;
      plan.delivered_kwh[i] += p * dt_hours;
      remaining -= p * dt_hours;
    }
  }
  finish(plan);
  return plan;
}

FleetReport simulate(std::span<const events::ParkingEvent> events, std::span<const int> predictions,
                     const events::ClassScheme& scheme, const ChargerParams& params,
                     std::span<const double> energy_overrides) {
  if (predictions.size() != events.size())
    throw UsageError("simulate: one prediction per event is required");
  if (!energy_overrides.empty() && energy_overrides.size() != events.size())
    throw UsageError("simulate: one energy per event is required");
  if (params.slot_minutes <= 0 || 60 % params.slot_minutes != 0)
    throw UsageError("timeslot width must divide one hour evenly");
  const int horizon = 1440 / params.slot_minutes;
  const double dt = params.slot_minutes / 60.0;
  std::map<std::chrono::sys_days, std::vector<std::size_t>> by_day;
  for (std::size_t i = 0; i < events.size(); ++i) by_day[day_of(events[i].start)].push_back(i);
  FleetReport report;
  for (const auto& [day, idx] : by_day) {
    const TimePoint origin{std::chrono::sys_days(day)};
    std::vector<ChargingTask> tasks;
    DayReport d;
    d.date = format_iso(origin).substr(0, 10);
    for (auto i : idx) {
      auto w = window_from_prediction(events[i].start, predictions[i], scheme,
                                      params.slot_minutes, origin, params.mode);
      w.window_end = std::min(w.window_end, horizon);
      ChargingTask t;
      t.id = std::to_string(events[i].id);
      t.arrival = w.arrival;
      t.window_end = w.window_end;
      t.energy_kwh = energy_overrides.empty() ? params.energy_kwh : energy_overrides[i];
      t.pmax_kw = params.pmax_kw;
      d.requested_kwh += t.energy_kwh;
      tasks.push_back(std::move(t));
    }
    const auto plan = schedule(tasks, horizon, {}, dt);
    const auto naive = charge_on_arrival(tasks, horizon, {}, dt);
    d.tasks = tasks.size();
    d.delivered_kwh = std::accumulate(plan.delivered_kwh.begin(), plan.delivered_kwh.end(), 0.0);
    d.peak_kw = plan.peak;
    d.par = plan.par;
    d.arrival_peak_kw = naive.peak;
    d.arrival_par = naive.par;
    report.days.push_back(std::move(d));
  }
  return report;
}

std::vector<ChargingTask> read_tasks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || trim(line) != "task_id,arrival_slot,window_end_slot,energy_kwh,pmax_kw")
    throw DataError(path.string() +
                        ": expected header task_id,arrival_slot,window_end_slot,energy_kwh,pmax_kw",
                    1);
  std::vector<ChargingTask> tasks;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != 5) throw DataError(path.string() + ": expected 5 fields", line_no);
    const auto a = parse_int(f[1]);
    const auto w = parse_int(f[2]);
    const auto e = parse_double(f[3]);
    const auto p = parse_double(f[4]);
    if (!a || !w || !e || !p) throw DataError(path.string() + ": malformed task row", line_no);
    tasks.push_back({trim(f[0]), static_cast<int>(*a), static_cast<int>(*w), *e, *p});
  }
  return tasks;
}

void write_tasks(const std::filesystem::path& path, std::span<const ChargingTask> tasks) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "task_id,arrival_slot,window_end_slot,energy_kwh,pmax_kw\n";
  for (const auto& t : tasks)
    out << t.id << ',' << t.arrival << ',' << t.window_end << ',' << format_double(t.energy_kwh)
        << ',' << format_double(t.pmax_kw) << '\n';
}

std::vector<double> read_baseline(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || trim(line) != "timeslot,load_kw")
    throw DataError(path.string() + ": expected header timeslot,load_kw", 1);
  std::vector<double> load;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    const auto t = f.size() == 2 ? parse_int(f[0]) : std::nullopt;
    const auto v = f.size() == 2 ? parse_double(f[1]) : std::nullopt;
    if (!t || !v || *t != static_cast<long long>(load.size()))
      throw DataError(path.string() + ": expected consecutive timeslot,load_kw rows", line_no);
    load.push_back(*v);
  }
  return load;
}

void write_plan(const std::filesystem::path& path, const SchedulePlan& plan) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "task_id";
  for (int t = 0; t < plan.horizon; ++t) out << ",t" << t;
  out << '\n';
  for (std::size_t i = 0; i < plan.allocation.rows(); ++i) {
    out << plan.task_ids[i];
    for (std::size_t t = 0; t < plan.allocation.cols(); ++t)
      out << ',' << format_double(plan.allocation(i, t));
    out << '\n';
  }
}

void write_summary(const std::filesystem::path& path, const SchedulePlan& plan,
                   const SchedulePlan& counterfactual, std::span<const ChargingTask> tasks) {
  nlohmann::ordered_json j;
  j["horizon"] = plan.horizon;
  j["dt_hours"] = plan.dt_hours;
  j["tasks"] = tasks.size();
  j["peak_kw"] = plan.peak;
  j["par"] = plan.par ? nlohmann::ordered_json(*plan.par) : nlohmann::ordered_json(nullptr);
  double delivered = 0, requested = 0;
  bool all_served = true;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    delivered += plan.delivered_kwh[i];
    requested += tasks[i].energy_kwh;
    if (plan.delivered_kwh[i] < tasks[i].energy_kwh - 1e-6) all_served = false;
  }
  j["delivered_kwh"] = delivered;
  j["requested_kwh"] = requested;
  j["all_tasks_fully_served"] = all_served;
  if (all_served && requested > 0) {
    double base = 0;
    for (double b : plan.baseline) base += b;
    const double mean = (base + requested / plan.dt_hours) / plan.horizon;
    j["par_requested"] = plan.peak / mean;
  } else {
    j["par_requested"] = nullptr;
  }
  j["counterfactual_peak_kw"] = counterfactual.peak;
  j["counterfactual_par"] =
      counterfactual.par ? nlohmann::ordered_json(*counterfactual.par) : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json per_task = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < tasks.size(); ++i)
    per_task.push_back({{"task_id", tasks[i].id},
                        {"requested_kwh", tasks[i].energy_kwh},
                        {"deliverable_kwh", deliverable(tasks[i], plan.dt_hours)},
                        {"delivered_kwh", plan.delivered_kwh[i]}});
  j["per_task"] = per_task;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_fleet_report(const std::filesystem::path& path, const FleetReport& report) {
  nlohmann::ordered_json days = nlohmann::ordered_json::array();
  for (const auto& d : report.days) {
    nlohmann::ordered_json j;
    j["date"] = d.date;
    j["tasks"] = d.tasks;
    j["requested_kwh"] = d.requested_kwh;
    j["delivered_kwh"] = d.delivered_kwh;
    j["peak_kw"] = d.peak_kw;
    j["par"] = d.par ? nlohmann::ordered_json(*d.par) : nlohmann::ordered_json(nullptr);
    j["charge_on_arrival_peak_kw"] = d.arrival_peak_kw;
    j["charge_on_arrival_par"] =
        d.arrival_par ? nlohmann::ordered_json(*d.arrival_par) : nlohmann::ordered_json(nullptr);
    days.push_back(std::move(j));
  }
  nlohmann::ordered_json root;
  root["days"] = days;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << root.dump(2) << '\n';
}

}  // namespace parkcharge::scheduler
