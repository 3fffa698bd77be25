#include <gtest/gtest.h>

#include <algorithm>

#include "parkcharge/rng.hpp"
#include "parkcharge/spatial.hpp"
#include "support/temp_dir.hpp"

using namespace parkcharge;
using namespace parkcharge::spatial;
using ingest::Point;
using ingest::SlotLayout;

namespace {

SlotLayout four_points() {
  return {{SlotId{1}, Point{0, 0}}, {SlotId{2}, Point{0, 1}}, {SlotId{3}, Point{10, 0}},
          {SlotId{4}, Point{10, 1}}};
}

SlotLayout random_layout(std::uint64_t seed, int n) {
  Rng rng(seed);
  SlotLayout out;
  for (int i = 0; i < n; ++i)
    out.push_back({SlotId{i}, Point{std::floor(uniform01(rng) * 500), std::floor(uniform01(rng) * 500)}});
  return out;
}

}  // namespace

TEST(KMeans, SeparatesTwoPairs) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = kmeans_fit(four_points(), {2, seed});
    EXPECT_EQ(m.cluster_of(SlotId{1}), m.cluster_of(SlotId{2}));
    EXPECT_EQ(m.cluster_of(SlotId{3}), m.cluster_of(SlotId{4}));
    EXPECT_NE(m.cluster_of(SlotId{1}), m.cluster_of(SlotId{3}));
  }
}

TEST(KMeans, KEqualsSlotsGivesSingletons) {
  const auto m = kmeans_fit(four_points(), {4, 3});
  EXPECT_EQ(m.cluster_ids.size(), 4u);
  EXPECT_EQ(m.wcss_history.back(), 0.0);
}

TEST(KMeans, RejectsBadK) {
  EXPECT_THROW(kmeans_fit(four_points(), {5, 0}), UsageError);
  EXPECT_THROW(kmeans_fit(four_points(), {1, 0}), UsageError);
  SlotLayout no_coords{{SlotId{1}, std::nullopt}, {SlotId{2}, std::nullopt}};
  EXPECT_THROW(kmeans_fit(no_coords, {2, 0}), DataError);
}

TEST(KMeans, GridValuesAcceptedAndObjectiveNonIncreasing) {
  const auto layout = random_layout(9, 60);
  for (int k = 2; k <= 6; ++k) {
    const auto m = kmeans_fit(layout, {k, 42});
    EXPECT_LE(static_cast<int>(m.cluster_ids.size()), k);
    EXPECT_EQ(m.assignment.size(), layout.size());
    for (std::size_t i = 1; i < m.wcss_history.size(); ++i)
      EXPECT_LE(m.wcss_history[i], m.wcss_history[i - 1] + 1e-9);
    const auto again = kmeans_fit(layout, {k, 42});
    EXPECT_EQ(again.assignment, m.assignment);
    EXPECT_EQ(again.wcss_history, m.wcss_history);
  }
}

TEST(KMeans, DuplicateCoordinatesAreAllowed) {
  SlotLayout dup{{SlotId{1}, Point{0, 0}}, {SlotId{2}, Point{0, 0}}, {SlotId{3}, Point{0, 0}},
                 {SlotId{4}, Point{5, 5}}};
  const auto m = kmeans_fit(dup, {2, 1});
  EXPECT_EQ(m.assignment.size(), 4u);
}

TEST(Dbscan, TwoClustersAndNoise) {
  auto layout = four_points();
  auto m = dbscan_fit(layout, {2, 2});
  EXPECT_EQ(m.cluster_ids, (std::vector<ClusterId>{0, 1}));
  EXPECT_EQ(m.cluster_of(SlotId{1}), m.cluster_of(SlotId{2}));
  layout.push_back({SlotId{5}, Point{100, 100}});
  m = dbscan_fit(layout, {2, 2});
  EXPECT_EQ(m.cluster_of(SlotId{5}), kNoise);
  EXPECT_EQ(m.cluster_ids.front(), kNoise);
  EXPECT_EQ(m.members(kNoise), (std::vector<SlotId>{SlotId{5}}));
  EXPECT_EQ(cluster_name(kNoise), "noise");
}

TEST(Dbscan, GridValuesAccepted) {
  const auto layout = random_layout(3, 40);
  for (double eps : {50.0, 75.0, 100.0, 125.0, 150.0})
    for (int ms : {2, 3, 4}) EXPECT_EQ(dbscan_fit(layout, {eps, ms}).assignment.size(), 40u);
  EXPECT_THROW(dbscan_fit(layout, {0.0, 2}), UsageError);
  EXPECT_THROW(dbscan_fit(layout, {10.0, 0}), UsageError);
}

TEST(Dbscan, IndependentOfInputOrder) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto layout = random_layout(seed, 50);
    const auto ref = dbscan_fit(layout, {60.0, 3});
    Rng rng(seed + 100);
    shuffle(std::span<ingest::SlotPosition>(layout), rng);
    EXPECT_EQ(dbscan_fit(layout, {60.0, 3}).assignment, ref.assignment);
  }
}

TEST(SingleArea, CoversEveryslot) {
  SlotLayout layout{{SlotId{3}, std::nullopt}, {SlotId{7}, std::nullopt}};
  const auto m = single_area(layout);
  EXPECT_EQ(m.cluster_ids.size(), 1u);
  EXPECT_EQ(m.members(m.cluster_ids[0]).size(), 2u);
}

TEST(SpatialCsv, RoundTrip) {
  test::TempDir dir;
  auto layout = four_points();
  layout.push_back({SlotId{5}, Point{100, 100}});
  const auto m = dbscan_fit(layout, {2, 2});
  write_model(m, dir / "spatial.csv");
  EXPECT_EQ(test::read_file(dir / "spatial.csv").substr(0, 18), "slot_id,cluster_id");
  const auto back = read_model(dir / "spatial.csv");
  EXPECT_EQ(back.assignment, m.assignment);
  EXPECT_EQ(back.cluster_ids, m.cluster_ids);
  EXPECT_EQ(back.describe(), m.describe());
}
