#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "parkcharge/events.hpp"
#include "parkcharge/ingest.hpp"
#include "parkcharge/matrix.hpp"
#include "parkcharge/spatial.hpp"

namespace parkcharge::features {

enum class BaseFeature { h, m, dw, s, wr };

std::string_view to_string(BaseFeature f);

/// Which features feed a model. `spatial` must be set when spt or ocy is used.
struct FeatureSpec {
  std::set<BaseFeature> base;
  bool use_spt = false;
  bool use_ocy = false;
  std::shared_ptr<const spatial::SpatialModel> spatial;

  /// All five event features.
  static std::set<BaseFeature> all_base();
  /// Parses "all", "h", "h,m,wr", optionally followed by "+spt" / "+ocy".
  static FeatureSpec parse(std::string_view text);

  /// "h", "all", "all+spt+ocy", ...
  std::string name() const;
  void validate() const;
};

struct EventFeatures {
  int hour = 0;
  int minute = 0;   ///< floored to a multiple of 5
  int weekday = 0;  ///< Monday = 0
  SlotId slot{};
  Weather weather = Weather::unknown;
};

EventFeatures event_features(const events::ParkingEvent& e);

/// Per-slot occupancy history for "state at time t" queries.
class FrameIndex {
public:
  explicit FrameIndex(std::span<const ingest::OccupancyFrame> frames);

  /// Latest observation of `slot` at or before `t` on the same calendar day.
  std::optional<bool> state_at(SlotId slot, TimePoint t) const;
  const std::set<SlotId>& slots() const { return slots_; }

private:
  struct Obs {
    TimePoint t;
    bool busy;
  };
  std::unordered_map<SlotId, std::vector<Obs>> history_;
  std::set<SlotId> slots_;
};

/// Busy fraction of every area (in `model.cluster_ids` order) as seen at
/// `start`. The arriving car's own slot counts as busy. An area with no slot
/// observed yet that day contributes 0 and bumps `*empty_clusters`.
std::vector<double> occupancy_vector(SlotId slot, TimePoint start, const FrameIndex& index,
                                     const spatial::SpatialModel& model,
                                     std::size_t* empty_clusters = nullptr);

struct FeatureMatrix {
  Matrix x;
  std::vector<std::string> columns;
  /// Original feature name (h, m, dw, s, wr, spt, ocy) to encoded column indices.
  std::map<std::string, std::vector<std::size_t>> groups;
  std::vector<int> targets;
  int num_classes = 0;
  std::vector<events::EventId> event_ids;
  std::size_t empty_cluster_warnings = 0;
};

/// Encodes h and m as integers, dw/s/wr/spt one-hot, ocy as ratios. Columns
/// are sorted by name. One-hot categories come from the domain (7 weekdays,
/// 4 weather values, `slot_universe`, the spatial model's clusters) so any
/// subset of events yields the same schema.
FeatureMatrix build_matrix(std::span<const events::LabeledEvent> events, const FeatureSpec& spec,
                           const FrameIndex& frames, const std::set<SlotId>& slot_universe,
                           int num_classes);

/// features.csv plus a JSON sidecar with the spec and column groups.
void write_matrix(const FeatureMatrix& m, const FeatureSpec& spec,
                  const std::filesystem::path& csv_path);

}  // namespace parkcharge::features
