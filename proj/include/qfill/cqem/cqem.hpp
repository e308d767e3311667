// SPDX-License-Identifier: Apache-2.0
#pragma once

// Classical-to-quantum event matching. Classical events are discretized into
// kappa identifiers; quantum feature vectors computed for a sample are
// averaged per kappa and reused for unseen events with the same kappa.

#include "qfill/core/dataset.hpp"

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace qfill::cqem {

struct MatchConfig {
    std::size_t n_bins = 30;
    /// Drop pool events whose id belongs to the index's source sample.
    bool exclude_source = true;

    /// Throws Error{InvalidArgument} when n_bins < 2.
    void validate() const;
};

/// Canonical rendering: bin indices joined by '|', e.g. "0|1".
using KappaId = std::string;

/// floor((v + 1) * n_bins / 2) clamped to [0, n_bins - 1].
std::size_t bin_index(double v, std::size_t n_bins) noexcept;
std::vector<std::size_t> kappa_bins(std::span<const double> features, std::size_t n_bins);
KappaId compute_kappa(std::span<const double> features, std::size_t n_bins);

/// Componentwise mean of the rows, summed pairwise in a fixed tree around
/// the first row so identical rows reproduce that row exactly.
std::vector<double> unify_mean(const std::vector<const std::vector<double> *> &rows);

struct MatchEntry {
    std::vector<double> vector;
    std::size_t count = 0;
};

class MatchIndex {
  public:
    MatchIndex() = default;
    MatchIndex(std::size_t n_bins, std::size_t dim, std::map<KappaId, MatchEntry> entries,
               std::vector<EventId> source_ids, std::vector<std::string> feature_names);

    [[nodiscard]] std::size_t n_bins() const noexcept { return n_bins_; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] const std::map<KappaId, MatchEntry> &entries() const noexcept {
        return entries_;
    }
    [[nodiscard]] const MatchEntry *find(const KappaId &kappa) const;
    /// Sorted.
    [[nodiscard]] const std::vector<EventId> &source_ids() const noexcept { return source_ids_; }
    [[nodiscard]] bool is_source(EventId id) const;
    [[nodiscard]] const std::vector<std::string> &feature_names() const noexcept {
        return feature_names_;
    }

  private:
    std::size_t n_bins_ = 0;
    std::size_t dim_ = 0;
    std::map<KappaId, MatchEntry> entries_;
    std::vector<EventId> source_ids_;
    std::vector<std::string> feature_names_;
};

/// `classical` and `quantum` hold the same events (matched by event_id) in
/// classical and transformed form. Labels are never read.
/// Throws Error{DimensionMismatch} when the events do not pair up.
MatchIndex build_index(const EventDataset &classical, const EventDataset &quantum,
                       const MatchConfig &config);

/// Events of `pool` whose kappa is indexed, carrying the unified quantum
/// vector and their own timestamp, id and label.
EventDataset match_events(const MatchIndex &index, const EventDataset &pool,
                          const MatchConfig &config);

/// 1 - 1/n_bins. Throws Error{InvalidArgument} when n_bins < 2.
double resolution(std::size_t n_bins);
/// "97%" style rendering of resolution().
std::string format_resolution(std::size_t n_bins);

/// log10 of n_bins^p.
double theoretical_state_count(std::size_t n_bins, std::size_t p);

/// Number of distinct kappas in a dataset.
std::size_t unique_kappa_count(const EventDataset &dataset, std::size_t n_bins);

struct MatchReport {
    std::size_t n_bins = 0;
    double resolution = 0.0;
    std::size_t unique_kappas = 0;
    std::size_t pool_size = 0;  ///< after source exclusion
    std::size_t matched = 0;
    double match_rate = 0.0;
};

MatchReport make_report(const MatchIndex &index, const EventDataset &pool,
                        const EventDataset &matched, const MatchConfig &config);
nlohmann::json to_json(const MatchReport &r);

} // namespace qfill::cqem
