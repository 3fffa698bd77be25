#include <gtest/gtest.h>

#include <numeric>

#include "parkcharge/scheduler.hpp"
#include "support/schedule_oracle.hpp"
#include "support/temp_dir.hpp"

using namespace parkcharge;
using namespace parkcharge::scheduler;
using events::ClassScheme;

namespace {

ChargingTask task(int a, int e, double energy, double pmax, std::string id = "x") {
  return {std::move(id), a, e, energy, pmax};
}

void expect_valid(const SchedulePlan& p, const std::vector<ChargingTask>& tasks) {
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    double delivered = 0;
    for (int t = 0; t < p.horizon; ++t) {
      const double v = p.allocation(i, t);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, tasks[i].pmax_kw + 1e-9);
      if (t < tasks[i].arrival || t >= tasks[i].window_end) EXPECT_EQ(v, 0.0);
      delivered += v * p.dt_hours;
    }
    EXPECT_NEAR(delivered, deliverable(tasks[i], p.dt_hours), 1e-6);
    EXPECT_LE(delivered, tasks[i].energy_kwh + 1e-9);
  }
}

}  // namespace

TEST(Window, ClassLowerBounds) {
  const auto low = ClassScheme::low();
  const auto high = ClassScheme::high();
  const auto origin = make_time(2015, 11, 12, 0, 0);
  const auto w = window_from_prediction(make_time(2015, 11, 12, 9, 15), 2, low, 15, origin);
  EXPECT_EQ(w.arrival, 37);
  EXPECT_EQ(w.window_end - w.arrival, 16);
  EXPECT_EQ(window_minutes(2, high), 60);
  EXPECT_EQ(window_minutes(0, low), 60);
  EXPECT_EQ(window_minutes(5, high), 480);
  EXPECT_EQ(window_minutes(1, low, WindowMode::midpoint), 150);
  EXPECT_EQ(window_minutes(1, low, WindowMode::upper), 240);
  EXPECT_EQ(window_minutes(2, low, WindowMode::upper), 240);
  EXPECT_THROW(window_from_prediction(origin, 0, low, 7, origin), UsageError);
  EXPECT_THROW(parse_window_mode("widest"), UsageError);
}

TEST(Window, FlooredToWholeSlotsAtLeastOne) {
  const ClassScheme tiny("tiny", {10}, {"a", "b"});
  const auto origin = make_time(2015, 11, 12, 0, 0);
  const auto w = window_from_prediction(origin, 0, tiny, 15, origin);
  EXPECT_EQ(w.window_end - w.arrival, 1);
  // arrival inside a slot belongs to that slot
  EXPECT_EQ(window_from_prediction(origin + std::chrono::minutes(29), 0, tiny, 15, origin).arrival, 1);
}

TEST(Par, Examples) {
  EXPECT_EQ(par(std::vector<double>{3, 3, 3}), 1.0);
  EXPECT_EQ(par(std::vector<double>{4, 2, 0}), 2.0);
  EXPECT_THROW(par(std::vector<double>{0, 0}), DataError);
}

TEST(Schedule, TightWindowIsFlat) {
  const std::vector<ChargingTask> tasks{task(0, 3, 6, 2)};
  const auto p = schedule(tasks, 3, {}, 1.0);
  for (int t = 0; t < 3; ++t) EXPECT_NEAR(p.allocation(0, t), 2.0, 1e-9);
  EXPECT_NEAR(*p.par, 1.0, 1e-9);
  expect_valid(p, tasks);
}

TEST(Schedule, TwoTasksShareAWindow) {
  const std::vector<ChargingTask> tasks{task(0, 2, 2, 2, "a"), task(0, 2, 2, 2, "b")};
  const auto p = schedule(tasks, 2, {}, 1.0);
  const auto agg = p.aggregate();
  EXPECT_NEAR(agg[0], 2.0, 1e-9);
  EXPECT_NEAR(agg[1], 2.0, 1e-9);
  EXPECT_NEAR(*p.par, 1.0, 1e-9);
  EXPECT_EQ(p.task_ids, (std::vector<std::string>{"a", "b"}));
}

TEST(Schedule, WindowLimitedTaskGetsItsCapacity) {
  const std::vector<ChargingTask> tasks{task(1, 2, 100, 4)};
  const auto p = schedule(tasks, 4, {}, 0.5);
  EXPECT_NEAR(p.delivered_kwh[0], 2.0, 1e-9);
  EXPECT_EQ(deliverable(tasks[0], 0.5), 2.0);
}

TEST(Schedule, BaselineValleysAreFilled) {
  const std::vector<double> base{5, 1, 1, 5};
  const std::vector<ChargingTask> tasks{task(0, 4, 4, 10)};
  const auto p = schedule(tasks, 4, base, 1.0);
  EXPECT_NEAR(p.peak, 5.0, 1e-6);
  expect_valid(p, tasks);
}

TEST(Schedule, RejectsTasksOutsideTheHorizon) {
  EXPECT_THROW(schedule(std::vector<ChargingTask>{task(2, 7, 1, 1)}, 6, {}, 1.0), DataError);
  EXPECT_THROW(schedule(std::vector<ChargingTask>{task(2, 2, 1, 1)}, 6, {}, 1.0), DataError);
  EXPECT_THROW(schedule(std::vector<ChargingTask>{task(0, 2, -1, 1)}, 6, {}, 1.0), DataError);
  EXPECT_THROW(schedule(std::vector<ChargingTask>{task(0, 2, 1, 0)}, 6, {}, 1.0), DataError);
  EXPECT_THROW(schedule(std::vector<ChargingTask>{task(0, 2, 1, 1)}, 6, std::vector<double>{1, 2}, 1.0),
               DataError);
}

TEST(Schedule, MatchesBruteForceOnQuantizedInstances) {
  Rng rng(2024);
  for (int i = 0; i < 150; ++i) {
    const auto q = test::random_instance(rng);
    const auto base = q.baseline();
    const auto p = schedule(q.tasks, q.horizon, base, q.dt_hours);
    const double bf = test::brute_force_peak(q);
    EXPECT_LE(p.peak, bf + 1e-6 * std::max(1.0, bf));
    EXPECT_LE(bf - p.peak, q.unit() + 1e-9);
    EXPECT_TRUE(is_feasible(q.tasks, q.horizon, base, q.dt_hours, bf + 1e-9));
    expect_valid(p, q.tasks);
  }
}

TEST(Schedule, RelaxingWindowsNeverRaisesThePeak) {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    auto q = test::random_instance(rng);
    const auto base = q.baseline();
    const double before = schedule(q.tasks, q.horizon + 2, [&] {
      auto b = base;
      b.resize(q.horizon + 2, 0.0);
      return b;
    }(), q.dt_hours).peak;
    auto relaxed = q.tasks;
    for (auto& t : relaxed) t.window_end += static_cast<int>(uniform_index(rng, 3));
    auto b = base;
    b.resize(q.horizon + 2, 0.0);
    const double after = schedule(relaxed, q.horizon + 2, b, q.dt_hours).peak;
    EXPECT_LE(after, before + 1e-6 * std::max(1.0, before));
  }
}

TEST(Schedule, NeverWorseThanChargeOnArrival) {
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const auto q = test::random_instance(rng);
    const auto base = q.baseline();
    const auto s = schedule(q.tasks, q.horizon, base, q.dt_hours);
    const auto c = charge_on_arrival(q.tasks, q.horizon, base, q.dt_hours);
    expect_valid(c, q.tasks);
    EXPECT_LE(s.peak, c.peak + 1e-9);
  }
}

TEST(Schedule, SimultaneousArrivalsSpreadStrictlyBetter) {
  std::vector<ChargingTask> tasks;
  for (int i = 0; i < 4; ++i) tasks.push_back(task(0, 8, 4, 4, "t" + std::to_string(i)));
  const auto s = schedule(tasks, 8, {}, 1.0);
  const auto c = charge_on_arrival(tasks, 8, {}, 1.0);
  EXPECT_LT(*s.par, *c.par);
  EXPECT_NEAR(*s.par, 1.0, 1e-9);
}

TEST(Simulate, EmptyDayAndIdenticalTasks) {
  const auto scheme = ClassScheme::low();
  EXPECT_TRUE(simulate({}, {}, scheme, {}).days.empty());

  std::vector<events::ParkingEvent> ev;
  for (int i = 0; i < 10; ++i) {
    events::ParkingEvent e;
    e.id = i;
    e.slot = SlotId{i};
    e.start = make_time(2015, 11, 12, 8, 0);
    e.duration_min = 600;
    ev.push_back(e);
  }
  const std::vector<int> pred(10, 2);
  const auto r = simulate(ev, pred, scheme, {});
  ASSERT_EQ(r.days.size(), 1u);
  const auto& d = r.days[0];
  EXPECT_EQ(d.tasks, 10u);
  EXPECT_NEAR(d.delivered_kwh, 100.0, 1e-6);
  EXPECT_LE(*d.par, *d.arrival_par + 1e-9);
  EXPECT_LE(d.peak_kw, d.arrival_peak_kw + 1e-9);
  EXPECT_THROW(simulate(ev, std::vector<int>(3, 0), scheme, {}), UsageError);
}

TEST(Files, TasksRoundTripAndHeaderCheck) {
  test::TempDir dir;
  const std::vector<ChargingTask> tasks{task(0, 4, 2.5, 7.4, "ev1"), task(3, 9, 10, 11, "ev2")};
  write_tasks(dir / "tasks.csv", tasks);
  EXPECT_EQ(test::read_file(dir / "tasks.csv").substr(0, 55),
            "task_id,arrival_slot,window_end_slot,energy_kwh,pmax_kw");
  const auto back = read_tasks(dir / "tasks.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].id, "ev2");
  EXPECT_EQ(back[1].window_end, 9);
  EXPECT_EQ(back[0].energy_kwh, 2.5);
  dir.write("bad.csv", "id,a,b\n");
  EXPECT_THROW(read_tasks(dir / "bad.csv"), DataError);
  dir.write("base.csv", "timeslot,load_kw\n0,1.5\n1,2\n");
  EXPECT_EQ(read_baseline(dir / "base.csv"), (std::vector<double>{1.5, 2}));
  dir.write("gap.csv", "timeslot,load_kw\n0,1.5\n2,2\n");
  EXPECT_THROW(read_baseline(dir / "gap.csv"), DataError);
}

TEST(Files, PlanAndSummary) {
  test::TempDir dir;
  const std::vector<ChargingTask> tasks{task(0, 2, 2, 2, "a"), task(0, 2, 2, 2, "b")};
  const auto p = schedule(tasks, 2, {}, 1.0);
  write_plan(dir / "plan.csv", p);
  EXPECT_EQ(test::read_file(dir / "plan.csv").substr(0, 13), "task_id,t0,t1");
  write_summary(dir / "summary.json", p, charge_on_arrival(tasks, 2, {}, 1.0), tasks);
  const auto s = test::read_file(dir / "summary.json");
  for (const auto* key : {"\"peak_kw\"", "\"par\"", "\"counterfactual_par\"", "\"all_tasks_fully_served\""})
    EXPECT_NE(s.find(key), std::string::npos) << key;
}
