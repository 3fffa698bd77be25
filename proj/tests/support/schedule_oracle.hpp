#pragma once

#include <algorithm>
#include <set>
#include <vector>

#include "parkcharge/rng.hpp"
#include "parkcharge/scheduler.hpp"

namespace parkcharge::test {

// Small scheduling instance on a power grid of `unit` kW steps
// (unit = 0.25 * pmax, shared by every task).
struct QuantizedInstance {
  int horizon = 0;
  double dt_hours = 1.0;
  double pmax = 0.0;
  std::vector<scheduler::ChargingTask> tasks;
  std::vector<int> baseline_units;

  double unit() const { return pmax / 4; }
  std::vector<double> baseline() const {
    std::vector<double> b;
    for (int u : baseline_units) b.push_back(u * unit());
    return b;
  }
};

inline QuantizedInstance random_instance(Rng& rng) {
  QuantizedInstance q;
  q.horizon = 1 + static_cast<int>(uniform_index(rng, 6));
  q.dt_hours = std::array<double, 3>{0.25, 0.5, 1.0}[uniform_index(rng, 3)];
  q.pmax = 1.0 + static_cast<double>(uniform_index(rng, 8));
  const int n = 1 + static_cast<int>(uniform_index(rng, 3));
  for (int i = 0; i < n; ++i) {
    scheduler::ChargingTask t;
    t.id = "t" + std::to_string(i);
    t.arrival = static_cast<int>(uniform_index(rng, q.horizon));
    t.window_end = t.arrival + 1 + static_cast<int>(uniform_index(rng, q.horizon - t.arrival));
    const int window = t.window_end - t.arrival;
    // sometimes more than the window can take
    const int units = static_cast<int>(uniform_index(rng, 4 * window + 3));
    t.energy_kwh = units * q.unit() * q.dt_hours;
    t.pmax_kw = q.pmax;
    q.tasks.push_back(t);
  }
  q.baseline_units.assign(q.horizon, 0);
  if (uniform01(rng) < 0.5)
    for (auto& b : q.baseline_units) b = static_cast<int>(uniform_index(rng, 4));
  return q;
}

// Exhaustive minimum peak over quantized allocations delivering every task's
// deliverable energy. Enumerates the reachable aggregate load vectors task by task.
inline double brute_force_peak(const QuantizedInstance& q) {
  std::set<std::vector<int>> states{q.baseline_units};
  for (const auto& t : q.tasks) {
    const int window = t.window_end - t.arrival;
    const int capacity = 4 * window;
    const int want = std::min(capacity, static_cast<int>(std::lround(t.energy_kwh / (q.unit() * q.dt_hours))));
    std::set<std::vector<int>> next;
    std::vector<int> levels(window, 0);
    for (const auto& s : states) {
      // every composition of `want` into `window` parts of 0..4
      auto rec = [&](auto&& self, int slot, int left) -> void {
        if (slot == window) {
          if (left != 0) return;
          auto agg = s;
          for (int k = 0; k < window; ++k) agg[t.arrival + k] += levels[k];
          next.insert(std::move(agg));
          return;
        }
        const int rest = 4 * (window - slot - 1);
        for (int l = std::max(0, left - rest); l <= std::min(4, left); ++l) {
          levels[slot] = l;
          self(self, slot + 1, left - l);
        }
      };
      rec(rec, 0, want);
    }
    states = std::move(next);
  }
  int best = -1;
  for (const auto& s : states) {
    const int peak = *std::max_element(s.begin(), s.end());
    if (best < 0 || peak < best) best = peak;
  }
  return best * q.unit();
}

}  // namespace parkcharge::test
