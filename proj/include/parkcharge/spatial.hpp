#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "parkcharge/ingest.hpp"

namespace parkcharge::spatial {

/// Cluster label. DBSCAN noise gets kNoise and is treated downstream as its own area.
using ClusterId = int;
inline constexpr ClusterId kNoise = -1;

std::string cluster_name(ClusterId id);

enum class Algorithm { kmeans, dbscan };

struct KMeansParams {
  int k = 2;
  std::uint64_t seed = 0;
  int max_iterations = 300;
  /// Restarts from different seeded centers; the lowest final WCSS wins.
  int n_init = 10;
};

struct DbscanParams {
  double eps = 50.0;
  int min_samples = 2;
};

/// Sub-area assignment for every slot of a layout.
struct SpatialModel {
  Algorithm algorithm = Algorithm::kmeans;
  KMeansParams kmeans;
  DbscanParams dbscan;
  std::map<SlotId, ClusterId> assignment;
  /// Non-empty clusters in ascending order (kNoise first when present).
  std::vector<ClusterId> cluster_ids;
  /// kmeans only: within-cluster sum of squares after each Lloyd iteration.
  std::vector<double> wcss_history;
  int iterations = 0;

  ClusterId cluster_of(SlotId slot) const;
  std::vector<SlotId> members(ClusterId cluster) const;
  /// Short label such as "kmeans(k=4)" or "dbscan(eps=50,min=2)".
  std::string describe() const;
};

/// Lloyd's algorithm from k distinct points drawn by `seed`, best of n_init runs.
SpatialModel kmeans_fit(const ingest::SlotLayout& layout, const KMeansParams& params);

/// Density clustering on Euclidean coordinates. Clusters are numbered by their
/// smallest core slot id and a border point joins the cluster of its nearest
/// core neighbour (lowest cluster id on ties), so the result does not depend
/// on input order.
SpatialModel dbscan_fit(const ingest::SlotLayout& layout, const DbscanParams& params);

/// Every layout slot in a single area. Used when no coordinates exist.
SpatialModel single_area(const ingest::SlotLayout& layout);

/// spatial.csv (`slot_id,cluster_id`) plus a JSON sidecar with the parameters.
void write_model(const SpatialModel& model, const std::filesystem::path& csv_path);
SpatialModel read_model(const std::filesystem::path& csv_path);

}  // namespace parkcharge::spatial
