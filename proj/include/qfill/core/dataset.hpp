// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace qfill {

/// Microseconds since the Unix epoch.
using Timestamp = std::int64_t;
using EventId = std::uint64_t;

inline constexpr Timestamp kMicrosPerHour = 3'600'000'000LL;
inline constexpr Timestamp kMicrosPerDay = 24 * kMicrosPerHour;

struct TradeEvent {
    Timestamp timestamp = 0;
    EventId event_id = 0;
    std::vector<double> features;
    std::optional<int> label;  ///< 1 = filled, 0 = not filled
};

/// Immutable, validated, time-ordered event table. Order is ascending by
/// (timestamp, event_id); event ids are unique.
class EventDataset {
  public:
    EventDataset() = default;

    /// Validates ordering, id uniqueness, feature width and labels.
    /// Throws Error{NonMonotonicTime | RaggedRow | NonBinaryLabel}.
    EventDataset(std::vector<TradeEvent> events, std::size_t feature_count,
                 std::vector<std::string> feature_names = {},
                 std::string provenance = "classical");

    [[nodiscard]] const std::vector<TradeEvent> &events() const noexcept { return events_; }
    [[nodiscard]] std::size_t size() const noexcept { return events_.size(); }
    [[nodiscard]] bool empty() const noexcept { return events_.empty(); }
    [[nodiscard]] std::size_t feature_count() const noexcept { return feature_count_; }
    [[nodiscard]] const std::vector<std::string> &feature_names() const noexcept {
        return feature_names_;
    }
    [[nodiscard]] const std::string &provenance() const noexcept { return provenance_; }
    [[nodiscard]] const TradeEvent &operator[](std::size_t i) const { return events_[i]; }

    /// Names used in CSV headers: the stored names, or f0..f{p-1}.
    [[nodiscard]] std::vector<std::string> column_names() const;

  private:
    std::vector<TradeEvent> events_;
    std::size_t feature_count_ = 0;
    std::vector<std::string> feature_names_;
    std::string provenance_ = "classical";
};

struct FeatureStats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double std = 0.0;  ///< population standard deviation
};

struct DatasetStats {
    std::size_t n_events = 0;
    std::size_t n_labeled = 0;
    double label_rate = 0.0;  ///< over labeled events only
    double mean_step_change = 0.0;
    std::vector<FeatureStats> per_feature;
};

/// Reads `timestamp,event_id,label,<p feature columns>`; empty label cells
/// are unlabeled events. Throws Error{MissingColumn | NonMonotonicTime |
/// RaggedRow | NonBinaryLabel | Io}, naming the offending data row.
EventDataset load_dataset(const std::filesystem::path &path,
                          std::string provenance = "classical");

/// Writes the CSV schema above with 17 significant digits per value.
void save_dataset(const EventDataset &dataset, const std::filesystem::path &path);

/// Serializes to the CSV text written by save_dataset.
std::string to_csv(const EventDataset &dataset);
EventDataset parse_csv(const std::string &text, std::string provenance = "classical");

/// Events with t_start <= timestamp <= t_end, order preserved.
/// Throws Error{InvertedWindow} if t_start > t_end.
EventDataset slice_window(const EventDataset &dataset, Timestamp t_start, Timestamp t_end);

/// Throws Error{EmptyDataset} on an empty dataset.
DatasetStats summarize(const EventDataset &dataset);

nlohmann::json to_json(const DatasetStats &stats);

/// Builds a dataset sharing metadata with `like` but holding `events`.
EventDataset with_events(const EventDataset &like, std::vector<TradeEvent> events);

} // namespace qfill
