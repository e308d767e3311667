// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "qfill/common/rng.hpp"
#include "qfill/qsim/state.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace qfill::qsim {

enum class DriftMode { None, RandomWalk };

std::string_view to_string(DriftMode m) noexcept;

struct DriftConfig {
    DriftMode mode = DriftMode::None;
    double step_sigma = 0.0;  ///< per processed event
};

struct NoiseConfig {
    double p2 = 0.0;            ///< two-qubit depolarizing probability per pair gate
    double readout_flip = 0.0;  ///< per-outcome flip probability
    DriftConfig drift;
    std::uint64_t noise_seed = 0;

    /// Throws Error{InvalidArgument}.
    void validate() const;
    [[nodiscard]] bool has_drift() const noexcept {
        return drift.mode == DriftMode::RandomWalk && drift.step_sigma > 0.0;
    }
};

nlohmann::json to_json(const NoiseConfig &c);
/// Throws Error{ConfigParse}.
NoiseConfig noise_from_json(const nlohmann::json &j);

/// Shared additive offset on expectation values following a Gaussian random
/// walk. Starts at 0; advance() is called once per processed event.
class DriftWalk {
  public:
    DriftWalk(DriftConfig config, std::uint64_t seed);

    [[nodiscard]] double offset() const noexcept { return offset_; }
    void advance();
    /// Adds the current offset to every value, clamping to [-1, 1].
    void apply(std::span<double> values) const;

  private:
    DriftConfig config_;
    Rng rng_;
    double offset_ = 0.0;
};

/// With probability p2 applies a uniformly drawn non-identity two-qubit
/// Pauli on (site_a, site_b). No draw is made when p2 == 0.
void apply_depolarizing(QuantumState &state, unsigned site_a, unsigned site_b, double p2,
                        Rng &rng);

/// Runs the gates, following each two-qubit gate with apply_depolarizing.
void apply_gates_noisy(QuantumState &state, const GateSequence &gates, double p2, Rng &rng);

/// Mean of `shots` i.i.d. +/-1 outcomes with P(+1) = (1 + exact) / 2, each
/// flipped with probability readout_flip. Throws Error{InvalidArgument} when
/// shots == 0.
double sample_expectation(double exact, std::size_t shots, double readout_flip, Rng &rng);
double sample_expectation(const QuantumState &state, const PauliString &p, std::size_t shots,
                          double readout_flip, Rng &rng);

struct DriftProbeResult {
    double mean_abs_step = 0.0;
    /// median(mean observable, last third) - median(mean observable, first third)
    double median_shift = 0.0;
};

using FeatureTransform = std::function<std::vector<double>(std::span<const double>)>;

/// Feeds the same event through `transform` `repeats` times, applying a
/// drift walk seeded by `seed` that advances once per run.
/// Throws Error{InvalidArgument} when repeats < 9.
DriftProbeResult drift_probe(const FeatureTransform &transform, std::span<const double> event,
                             std::size_t repeats, const DriftConfig &drift, std::uint64_t seed);

/// Summary statistics of a run series (rows = runs); exposed for reuse by
/// callers that generate the runs themselves.
DriftProbeResult drift_statistics(const std::vector<std::vector<double>> &runs);

} // namespace qfill::qsim
