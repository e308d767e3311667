// SPDX-License-Identifier: Apache-2.0
#pragma once

// Synthetic RFQ event streams with a planted, slowly rotating logistic
// signal. Features follow a mean-reverting latent-factor walk clipped to
// [-1, 1]; the walk's innovation scale is calibrated so the mean per-feature
// step between consecutive events hits a target.

#include "qfill/core/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "json.hpp"

namespace qfill::synth {

struct SynthConfig {
    std::size_t n_events = 16000;
    std::size_t feature_count = 216;
    double label_rate_target = 0.37;
    double mean_step_change_target = 0.05;
    std::size_t signal_feature_count = 12;
    /// Correlation half-life of the signal direction; nullopt = constant.
    std::optional<Timestamp> signal_half_life_us = kMicrosPerDay;
    /// Length of the daily event-flow session inside each 24 h block.
    Timestamp trading_day_us = 8 * kMicrosPerHour;
    std::size_t events_per_day = 800;
    std::size_t factor_count = 8;
    /// Standard deviation of the latent logit carried by the signal.
    double signal_strength = 2.5;
    /// Marginal standard deviation of each feature before clipping.
    double feature_scale = 0.35;
    /// Share of feature variance explained by common factors.
    double factor_share = 0.6;
    Timestamp start_us = 1'693'526'400'000'000LL;  // 2023-09-01T00:00:00Z
    std::uint64_t base_seed = 0;

    /// Throws Error{InvalidArgument} on violated invariants.
    void validate() const;
};

struct GroundTruth {
    std::vector<std::size_t> signal_indices;
    /// Unit signal direction per event (n x k); empty for hand-built truths.
    std::vector<std::vector<double>> coefficients;
    double intercept = 0.0;
    double signal_strength = 0.0;
    double feature_scale = 1.0;
    std::vector<double> true_probability;

    /// Logit of the fill probability for `features` under direction `beta`.
    [[nodiscard]] double logit(const std::vector<double> &features,
                               const std::vector<double> &beta) const;
};

struct Generated {
    EventDataset dataset;
    GroundTruth truth;
    double innovation_scale = 0.0;  ///< calibrated walk innovation
};

/// Fully deterministic in `config`. Throws Error{CalibrationFailure} when
/// the step-change or label-rate targets cannot be met.
Generated generate(const SynthConfig &config);

/// Per blinding bucket (24 h blocks after a day-start origin):
///   ceiling_auc          AUC of the true probability on the bucket's events
///   blinded_ceiling_auc  AUC of the truth frozen at the origin (stale signal
///                        direction); null when the truth has no path
/// Both are averaged over origins with two-class buckets.
nlohmann::json plant_report(const GroundTruth &truth, const EventDataset &dataset,
                            std::size_t buckets = 5);

SynthConfig config_from_json(const nlohmann::json &j);
nlohmann::json to_json(const SynthConfig &config);
nlohmann::json to_json(const GroundTruth &truth);

} // namespace qfill::synth
