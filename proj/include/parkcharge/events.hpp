#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "parkcharge/common.hpp"
#include "parkcharge/ingest.hpp"

namespace parkcharge::events {

using EventId = std::uint64_t;

/// One car's continuous occupancy of one slot.
struct ParkingEvent {
  EventId id = 0;
  std::string dataset;
  SlotId slot{};
  TimePoint start;
  int duration_min = 0;
  Weather weather = Weather::unknown;
  bool partial = false;

  friend bool operator==(const ParkingEvent&, const ParkingEvent&) = default;
};

/// Ordinal duration bins. Class i covers (boundaries[i-1], boundaries[i]] in
/// minutes; the last class is open-ended.
class ClassScheme {
public:
  ClassScheme(std::string name, std::vector<int> boundaries, std::vector<std::string> labels);

  static ClassScheme low();
  static ClassScheme high();
  /// "low" or "high".
  static ClassScheme by_name(std::string_view name);

  const std::string& name() const { return name_; }
  const std::vector<int>& boundaries() const { return boundaries_; }
  const std::vector<std::string>& labels() const { return labels_; }
  int num_classes() const { return static_cast<int>(labels_.size()); }

  int classify(int duration_min) const;

private:
  std::string name_;
  std::vector<int> boundaries_;
  std::vector<std::string> labels_;
};

struct ExtractOptions {
  /// A frame gap wider than this multiple of the day's median cadence
  /// counts as missing monitoring.
  double gap_factor = 2.0;
};

/// Rebuilds events from frames sorted by (dataset, slot, timestamp). An event
/// runs from the first busy frame of a busy run to the next free frame.
/// Runs touching the first or last frame of a slot's day, or spanning a
/// monitoring gap, are flagged partial. Only busy-to-free transitions are
/// visible, so back-to-back occupancies by different cars merge into one event.
std::vector<ParkingEvent> extract_events(std::span<const ingest::OccupancyFrame> frames,
                                         const ExtractOptions& options = {});

struct CleanOptions {
  /// Minimum fraction of the lot's slots that must report on a day.
  double min_slot_coverage = 0.5;
  /// Lot size; defaults to the distinct slots seen in the frames of the dataset.
  std::optional<std::size_t> total_slots;
};

/// Drops partial events and every event on a (dataset, day) whose reporting
/// slot count falls below the coverage threshold. Ids are preserved.
std::vector<ParkingEvent> clean_events(std::span<const ParkingEvent> events,
                                       std::span<const ingest::OccupancyFrame> frames,
                                       const CleanOptions& options = {});

struct LabeledEvent {
  ParkingEvent event;
  int label = 0;
};

std::vector<LabeledEvent> label_events(std::span<const ParkingEvent> events,
                                       const ClassScheme& scheme);

struct ClassDistribution {
  std::vector<double> frequencies;
  double entropy = 0.0;
};

/// Normalised Shannon entropy, -sum p log2 p / log2 K, over frequencies that
/// are rescaled to sum to one first.
ClassDistribution normalized_entropy(std::span<const double> frequencies);

ClassDistribution class_distribution_entropy(std::span<const int> labels, int num_classes);

/// events.csv with low and high scheme labels per row.
void write_events(const std::filesystem::path& path, std::span<const ParkingEvent> events);
std::vector<ParkingEvent> read_events(const std::filesystem::path& path,
                                      const std::string& dataset = {});

}  // namespace parkcharge::events
