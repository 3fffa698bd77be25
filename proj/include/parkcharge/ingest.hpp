#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "parkcharge/common.hpp"

namespace parkcharge::ingest {

/// One timestamped busy/free observation of one slot.
struct OccupancyFrame {
  std::string dataset;
  std::string camera;
  TimePoint timestamp;
  SlotId slot;
  bool busy = false;
  Weather weather = Weather::unknown;

  friend bool operator==(const OccupancyFrame&, const OccupancyFrame&) = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Slot position. Coordinates are absent when the source carries none
/// (plain CNR occupancy logs without a geometry file).
struct SlotPosition {
  SlotId slot;
  std::optional<Point> position;
  friend bool operator==(const SlotPosition&, const SlotPosition&) = default;
};

/// One entry per slot, sorted by slot id.
using SlotLayout = std::vector<SlotPosition>;

struct ParseResult {
  std::vector<OccupancyFrame> frames;
  SlotLayout layout;
  std::vector<Warning> warnings;
};

enum class DateOrder { day_first, month_first };

struct CnrOptions {
  std::string dataset = "cnrpark";
  DateOrder date_order = DateOrder::day_first;
};

/// Reads a CNRPark-style occupancy log: `date,time,slot,busy,status,weather`
/// with an optional seventh `camera` column. A header line is optional.
/// Frames come back sorted by (slot, timestamp); the layout lists every slot
/// seen, without coordinates.
ParseResult parse_cnr_csv(const std::filesystem::path& path, const CnrOptions& options = {});

struct PklotOptions {
  /// Defaults to the directory's own name.
  std::optional<std::string> dataset;
};

/// Walks a PKLot-style tree of per-image XML annotations. Weather comes from
/// the nearest Sunny/Cloudy/Rainy directory component, the timestamp from the
/// file name (YYYY-MM-DD_HH_MM_SS.xml) and slot coordinates from the
/// rotated-rectangle center of the first file that mentions the slot.
ParseResult parse_pklot_xml(const std::filesystem::path& dir, const PklotOptions& options = {});

/// Parses one annotation document. Exposed for the directory walker and tests.
void parse_pklot_document(std::istream& in, TimePoint timestamp, Weather weather,
                          const std::string& dataset, const std::string& source,
                          ParseResult& into);

std::optional<TimePoint> parse_pklot_timestamp(const std::string& file_stem);

/// Reads a `slot_id,x,y` geometry file.
SlotLayout read_layout(const std::filesystem::path& path);
std::vector<OccupancyFrame> read_frames(const std::filesystem::path& path);

struct CanonicalPaths {
  std::filesystem::path frames;
  std::filesystem::path layout;
};

/// Writes frames.csv and layout.csv under `out_dir`. The layout is extended
/// with any frame slot it lacks so the two files agree on the slot set.
CanonicalPaths write_canonical(const std::vector<OccupancyFrame>& frames, const SlotLayout& layout,
                               const std::filesystem::path& out_dir);

/// Merges `extra` coordinates into `layout` (first seen wins) and sorts.
SlotLayout merge_layout(SlotLayout layout, const SlotLayout& extra);

/// Sorts by (dataset, slot, timestamp) and drops duplicate (dataset, slot, timestamp)
/// keys, keeping the first. Returns the number of dropped frames.
std::size_t normalize_frames(std::vector<OccupancyFrame>& frames, std::vector<Warning>* warnings);

}  // namespace parkcharge::ingest
