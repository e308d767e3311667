// SPDX-License-Identifier: Apache-2.0
#include "qfill/cqem/cqem.hpp"

#include "qfill/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

namespace qfill::cqem {

void MatchConfig::validate() const {
    if (n_bins < 2) {
        throw Error(ErrorKind::InvalidArgument, "n_bins must be >= 2");
    }
}

std::size_t bin_index(double v, std::size_t n_bins) noexcept {
    const double b = std::floor((v + 1.0) * static_cast<double>(n_bins) / 2.0);
    if (!(b > 0.0)) {
        return 0;  // also NaN
    }
    return std::min(static_cast<std::size_t>(std::min(b, 1e18)), n_bins - 1);
}

std::vector<std::size_t> kappa_bins(std::span<const double> features, std::size_t n_bins) {
    std::vector<std::size_t> bins(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        bins[i] = bin_index(features[i], n_bins);
    }
    return bins;
}

KappaId compute_kappa(std::span<const double> features, std::size_t n_bins) {
    KappaId k;
    k.reserve(features.size() * 3);
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (i > 0) {
            k += '|';
        }
        k += std::to_string(bin_index(features[i], n_bins));
    }
    return k;
}

namespace {

// Sum of rows[lo, hi) of (row[c] - ref[c]) in a fixed binary tree.
double pairwise_offset_sum(const std::vector<const std::vector<double> *> &rows, std::size_t lo,
                           std::size_t hi, std::size_t c, double ref) {
    if (hi - lo == 1) {
        return (*rows[lo])[c] - ref;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_offset_sum(rows, lo, mid, c, ref) + pairwise_offset_sum(rows, mid, hi, c, ref);
}

} // namespace

std::vector<double> unify_mean(const std::vector<const std::vector<double> *> &rows) {
    if (rows.empty()) {
        return {};
    }
    const auto &first = *rows.front();
    std::vector<double> out(first.size());
    const double k = static_cast<double>(rows.size());
    for (std::size_t c = 0; c < first.size(); ++c) {
        out[c] = first[c] + pairwise_offset_sum(rows, 0, rows.size(), c, first[c]) / k;
    }
    return out;
}

MatchIndex::MatchIndex(std::size_t n_bins, std::size_t dim, std::map<KappaId, MatchEntry> entries,
                       std::vector<EventId> source_ids, std::vector<std::string> feature_names)
    : n_bins_(n_bins), dim_(dim), entries_(std::move(entries)),
      source_ids_(std::move(source_ids)), feature_names_(std::move(feature_names)) {
    std::sort(source_ids_.begin(), source_ids_.end());
}

const MatchEntry *MatchIndex::find(const KappaId &kappa) const {
    const auto it = entries_.find(kappa);
    return it == entries_.end() ? nullptr : &it->second;
}

bool MatchIndex::is_source(EventId id) const {
    return std::binary_search(source_ids_.begin(), source_ids_.end(), id);
}

MatchIndex build_index(const EventDataset &classical, const EventDataset &quantum,
                       const MatchConfig &config) {
    config.validate();
    if (classical.size() != quantum.size()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "classical sample has " + std::to_string(classical.size()) +
                        " events, quantum sample " + std::to_string(quantum.size()));
    }
    std::unordered_map<EventId, std::size_t> qpos;
    qpos.reserve(quantum.size());
    for (std::size_t i = 0; i < quantum.size(); ++i) {
        qpos.emplace(quantum[i].event_id, i);
    }
    // Group in classical-sample order so the reduction tree is fixed.
    std::map<KappaId, std::vector<const std::vector<double> *>> groups;
    std::vector<EventId> ids;
    ids.reserve(classical.size());
    for (std::size_t i = 0; i < classical.size(); ++i) {
        const auto &e = classical[i];
        const auto it = qpos.find(e.event_id);
        if (it == qpos.end()) {
            throw Error(ErrorKind::DimensionMismatch,
                        "event " + std::to_string(e.event_id) + " has no quantum vector", i);
        }
        groups[compute_kappa(e.features, config.n_bins)].push_back(
            &quantum[it->second].features);
        ids.push_back(e.event_id);
    }
    std::map<KappaId, MatchEntry> entries;
    for (auto &[kappa, rows] : groups) {
        entries.emplace(kappa, MatchEntry{unify_mean(rows), rows.size()});
    }
    return MatchIndex(config.n_bins, quantum.feature_count(), std::move(entries), std::move(ids),
                      quantum.feature_names());
}

EventDataset match_events(const MatchIndex &index, const EventDataset &pool,
                          const MatchConfig &config) {
    config.validate();
    if (config.n_bins != index.n_bins()) {
        throw Error(ErrorKind::InvalidArgument, "n_bins differs from the index");
    }
    std::vector<TradeEvent> out;
    for (const auto &e : pool.events()) {
        if (config.exclude_source && index.is_source(e.event_id)) {
            continue;
        }
        const auto *entry = index.find(compute_kappa(e.features, config.n_bins));
        if (entry == nullptr) {
            continue;
        }
        out.push_back({e.timestamp, e.event_id, entry->vector, e.label});
    }
    return EventDataset(std::move(out), index.dim(), index.feature_names(), "matched");
}

double resolution(std::size_t n_bins) {
    if (n_bins < 2) {
        throw Error(ErrorKind::InvalidArgument, "n_bins must be >= 2");
    }
    return 1.0 - 1.0 / static_cast<double>(n_bins);
}

std::string format_resolution(std::size_t n_bins) {
    return std::to_string(static_cast<long>(std::lround(100.0 * resolution(n_bins)))) + "%";
}

double theoretical_state_count(std::size_t n_bins, std::size_t p) {
    return static_cast<double>(p) * std::log10(static_cast<double>(n_bins));
}

std::size_t unique_kappa_count(const EventDataset &dataset, std::size_t n_bins) {
    std::set<KappaId> seen;
    for (const auto &e : dataset.events()) {
        seen.insert(compute_kappa(e.features, n_bins));
    }
    return seen.size();
}

MatchReport make_report(const MatchIndex &index, const EventDataset &pool,
                        const EventDataset &matched, const MatchConfig &config) {
    MatchReport r;
    r.n_bins = config.n_bins;
    r.resolution = resolution(config.n_bins);
    r.unique_kappas = index.size();
    for (const auto &e : pool.events()) {
        if (!(config.exclude_source && index.is_source(e.event_id))) {
            ++r.pool_size;
        }
    }
    r.matched = matched.size();
    r.match_rate = r.pool_size == 0 ? 0.0
                                    : static_cast<double>(r.matched) /
                                          static_cast<double>(r.pool_size);
    return r;
}

nlohmann::json to_json(const MatchReport &r) {
    return {{"n_bins", r.n_bins},         {"resolution", r.resolution},
            {"unique_kappas", r.unique_kappas}, {"pool_size", r.pool_size},
            {"matched", r.matched},       {"match_rate", r.match_rate}};
}

} // namespace qfill::cqem
