#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "parkcharge/events.hpp"
#include "parkcharge/matrix.hpp"

namespace parkcharge::scheduler {

struct ChargingTask {
  std::string id;
  int arrival = 0;     ///< first timeslot
  int window_end = 0;  ///< exclusive
  double energy_kwh = 0.0;
  double pmax_kw = 0.0;
};

struct SchedulePlan {
  int horizon = 0;
  double dt_hours = 0.25;
  std::vector<std::string> task_ids;
  /// task x timeslot, kW
  Matrix allocation;
  std::vector<double> baseline;
  std::vector<double> delivered_kwh;
  double peak = 0.0;
  /// Unset when no load at all.
  std::optional<double> par;

  /// baseline + sum of allocations per timeslot.
  std::vector<double> aggregate() const;
};

enum class WindowMode { lower, midpoint, upper };
WindowMode parse_window_mode(std::string_view text);

/// Stay length in minutes granted to a predicted class. `lower` uses the
/// class lower bound, with class 0 taking the first threshold; the open top
/// class always uses its threshold.
int window_minutes(int predicted_class, const events::ClassScheme& scheme,
                   WindowMode mode = WindowMode::lower);

struct Window {
  int arrival = 0;
  int window_end = 0;
};

/// Arrival slot counted from `origin`; the window is floored to whole slots, at least one.
Window window_from_prediction(TimePoint arrival, int predicted_class,
                              const events::ClassScheme& scheme, int slot_minutes,
                              TimePoint origin, WindowMode mode = WindowMode::lower);

/// max_t L_t / mean_t L_t. Throws DataError on zero total load.
double par(std::span<const double> load);
double par(const SchedulePlan& plan);

/// Energy a task can take: min(energy, pmax * window hours).
double deliverable(const ChargingTask& task, double dt_hours);

/// Throws DataError unless every task fits in [0, horizon) and has sane parameters.
void validate_tasks(std::span<const ChargingTask> tasks, int horizon,
                    std::span<const double> baseline);

/// Whether every task can receive its deliverable energy with aggregate load <= cap.
bool is_feasible(std::span<const ChargingTask> tasks, int horizon,
                 std::span<const double> baseline, double dt_hours, double cap);

/// Minimum-peak allocation delivering every task's deliverable energy.
/// `baseline` may be empty (zero).
SchedulePlan schedule(std::span<const ChargingTask> tasks, int horizon,
                      std::span<const double> baseline, double dt_hours);

/// Every task at p_max from arrival until its deliverable energy is in.
SchedulePlan charge_on_arrival(std::span<const ChargingTask> tasks, int horizon,
                               std::span<const double> baseline, double dt_hours);

struct ChargerParams {
  double energy_kwh = 10.0;
  double pmax_kw = 7.4;
  int slot_minutes = 15;
  WindowMode mode = WindowMode::lower;
};

struct DayReport {
  std::string date;
  std::size_t tasks = 0;
  double delivered_kwh = 0.0;
  double requested_kwh = 0.0;
  double peak_kw = 0.0;
  std::optional<double> par;
  double arrival_peak_kw = 0.0;
  std::optional<double> arrival_par;
};

struct FleetReport {
  std::vector<DayReport> days;
};

/// One schedule per calendar day of the events (slots counted from midnight,
/// windows clipped at the end of the day). `energy_overrides`, when given,
/// holds one energy per event.
FleetReport simulate(std::span<const events::ParkingEvent> events, std::span<const int> predictions,
                     const events::ClassScheme& scheme, const ChargerParams& params,
                     std::span<const double> energy_overrides = {});

std::vector<ChargingTask> read_tasks(const std::filesystem::path& path);
void write_tasks(const std::filesystem::path& path, std::span<const ChargingTask> tasks);
std::vector<double> read_baseline(const std::filesystem::path& path);
void write_plan(const std::filesystem::path& path, const SchedulePlan& plan);
/// summary.json: peak, par, delivered energy and the charge-on-arrival counterfactual.
void write_summary(const std::filesystem::path& path, const SchedulePlan& plan,
                   const SchedulePlan& counterfactual, std::span<const ChargingTask> tasks);
void write_fleet_report(const std::filesystem::path& path, const FleetReport& report);

}  // namespace parkcharge::scheduler
