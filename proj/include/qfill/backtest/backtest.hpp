// SPDX-License-Identifier: Apache-2.0
#pragma once

// Walk-forward backtest. At each origin a model per family and training size
// is fit on the most recent labeled events strictly before the origin and
// scores every later labeled event inside the blinding horizon. Records are
// bucketed by whole 24 h blocks between the training window end and the
// scored event.

#include "qfill/core/dataset.hpp"
#include "qfill/learners/model.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace qfill::backtest {

enum class StrideMode { PerDay, EveryNth };

struct Stride {
    StrideMode mode = StrideMode::PerDay;
    std::size_t n = 1;  ///< for EveryNth: every n-th event is an origin
};

struct BacktestConfig {
    std::vector<std::size_t> training_sizes{500, 1000, 1500, 2000};
    std::size_t buckets = 5;
    std::vector<learners::Family> families{learners::Family::LR, learners::Family::GBT,
                                           learners::Family::RF, learners::Family::MLP};
    /// Per-family grids; families without an entry use compact_grid().
    std::map<learners::Family, std::vector<learners::Hyperparams>> grids;
    Stride stride{};
    std::size_t folds = 4;
    std::uint64_t master_seed = 0;

    /// Throws Error{InvalidArgument}.
    void validate() const;
    [[nodiscard]] std::vector<learners::Hyperparams> grid_for(learners::Family f,
                                                              std::size_t p) const;
};

/// One default cell per family.
std::vector<learners::Hyperparams> compact_grid(learners::Family f, std::size_t p);

nlohmann::json to_json(const BacktestConfig &c);
/// Accepts "grids": "compact" | "reference" | {family: [params...]}.
/// Throws Error{ConfigParse}.
BacktestConfig config_from_json(const nlohmann::json &j, std::size_t feature_count);

struct Source {
    std::string name;
    EventDataset dataset;
};

struct BacktestRecord {
    std::string source;
    learners::Family family = learners::Family::LR;
    std::size_t training_size = 0;
    Timestamp origin = 0;
    EventId event_id = 0;
    Timestamp timestamp = 0;
    Timestamp train_start = 0;
    Timestamp train_end = 0;
    Timestamp delta_us = 0;
    std::size_t bucket = 0;
    std::size_t grid_cell = 0;
    double probability = 0.0;
    int label = 0;
};

/// Groups aggregate per-origin AUCs. family == nullopt is the "All" row;
/// training_size == 0 pools all training sizes.
struct SummaryRow {
    std::string source;
    std::optional<learners::Family> family;
    std::size_t training_size = 0;
    std::size_t bucket = 0;
    std::size_t n_origins = 0;
    std::size_t n_records = 0;
    double mean_auc = 0.0;
    double median_auc = 0.0;
    double std_auc = 0.0;  ///< population std across origins
};

struct BacktestResult {
    std::vector<std::string> sources;
    std::vector<learners::Family> families;
    std::size_t buckets = 0;
    std::vector<BacktestRecord> records;
    std::vector<SummaryRow> summary;
    std::vector<std::string> skipped;  ///< single-class windows
};

/// floor(delta / 24 h). Throws Error{NonPositiveDelta} when delta < 1.
std::size_t bucketize(Timestamp delta_us);

/// Origin timestamps for the stride; the first event's block is included.
std::vector<Timestamp> origins(const EventDataset &dataset, const Stride &stride);

struct TrainingWindow {
    std::vector<std::size_t> indices;  ///< into dataset.events(), ascending
    Timestamp start = 0;
    Timestamp end = 0;
};

/// The most recent `size` labeled events with timestamp < origin, or
/// nullopt when fewer exist.
std::optional<TrainingWindow> select_window(const EventDataset &dataset, Timestamp origin,
                                            std::size_t size);

/// Seed of the model fit at (origin, family, training size); independent of
/// the source.
std::uint64_t fit_seed(std::uint64_t master, Timestamp origin, learners::Family f,
                       std::size_t size);

/// Grid search on the window. Throws Error{SingleClassWindow}.
learners::TrainedModel fit_window(const EventDataset &dataset, const TrainingWindow &window,
                                  learners::Family family, std::size_t size,
                                  Timestamp origin, const BacktestConfig &config);

/// Throws Error{InsufficientHistory | DimensionMismatch | InvalidArgument}.
BacktestResult run_protocol(const BacktestConfig &config, const std::vector<Source> &sources);

/// Recomputes result.summary from result.records.
std::vector<SummaryRow> summarize_records(const BacktestResult &result);

struct ComparisonCell {
    double median = 0.0;
    double std = 0.0;
    int diff_pp = 0;  ///< rounded percentage points vs the baseline median
};

struct ComparisonTable {
    std::string baseline;
    std::vector<std::string> sources;
    std::vector<std::string> rows;  ///< "All", "LR", "XGB", "RF", "NN"
    std::size_t buckets = 0;
    /// cells[source][row][bucket]; missing groups hold NaN medians.
    std::vector<std::vector<std::vector<ComparisonCell>>> cells;
};

/// Medians pooled over training sizes. Throws Error{MissingBaseline}.
ComparisonTable compare_sources(const BacktestResult &result, const std::string &baseline);
/// "+12", "−12" or "±0".
std::string format_diff(int pp);
/// Plain-text rendering with one "median ± std" column per (source, bucket)
/// and a "Diff. to <baseline>" column per source.
std::string render_table(const ComparisonTable &t);

nlohmann::json to_json(const SummaryRow &r);
std::string records_csv(const BacktestResult &result);
/// Inverse of records_csv; summary is recomputed. Sources and models keep
/// their order of first appearance. Throws Error{ConfigParse}.
BacktestResult parse_records_csv(const std::string &text, std::size_t buckets);
std::string decay_svg(const BacktestResult &result);
std::string feature_hist_svg(const std::vector<Source> &sources);

/// Writes records.csv, summary.json, decay.svg and feature_hist.svg.
/// Throws Error{Io}.
void emit_report(const BacktestResult &result, const std::vector<Source> &sources,
                 const std::filesystem::path &out_dir);

} // namespace qfill::backtest
