// SPDX-License-Identifier: Apache-2.0
#pragma once

// Projected quantum feature map: encoded features drive a Heisenberg-type
// brickwork circuit on a fiducial product state, and the transformed event
// is the vector of Pauli expectation values of the final state.

#include "qfill/core/dataset.hpp"
#include "qfill/preprocess/scaler.hpp"
#include "qfill/qsim/noise.hpp"
#include "qfill/qsim/state.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace qfill::pqfm {

enum class CouplingMode { Scalar, Triple };

std::string_view to_string(CouplingMode m) noexcept;

struct AnsatzConfig {
    std::size_t qubits = 16;
    std::size_t blocks = 1;  ///< one block = two Trotter repetitions
    double alpha = 1.0;
    std::uint64_t seed = 1;  ///< fiducial state
    CouplingMode coupling = CouplingMode::Scalar;
    qsim::Backend backend = qsim::Backend::Mps;
    qsim::MpsOptions mps{};
    std::optional<std::size_t> shots;  ///< nullopt = exact expectations
    qsim::NoiseConfig noise{};
    /// Two-local strings appended after the default 3N, in PauliString::name() form.
    std::vector<std::string> extra_observables;

    [[nodiscard]] std::size_t repetitions() const noexcept { return 2 * blocks; }
    /// Throws Error{InvalidArgument}.
    void validate() const;
};

/// "shorter": B=1, alpha=1.0, seed 1. "longer": B=2, alpha=0.1, seed 0.
/// Both default to 16 qubits. Throws Error{UnknownPreset}.
AnsatzConfig preset(std::string_view name, std::size_t qubits = 16);

nlohmann::json to_json(const AnsatzConfig &c);
/// Accepts an optional "preset" key whose values the remaining keys
/// override. Throws Error{ConfigParse | UnknownPreset}.
AnsatzConfig ansatz_from_json(const nlohmann::json &j);

struct Slot {
    std::size_t repetition = 0;
    std::size_t bond = 0;  ///< bond j couples sites (j, j + 1)
    qsim::Axis axis = qsim::Axis::XX;  ///< meaningful in triple mode only
};

/// Slots in circuit execution order; feature k drives slots()[k] and the
/// remaining slots carry angle 0.
class FeatureAssignment {
  public:
    FeatureAssignment() = default;
    FeatureAssignment(std::size_t n_features, std::size_t n_qubits, std::size_t blocks,
                      CouplingMode mode);

    [[nodiscard]] std::size_t feature_count() const noexcept { return n_features_; }
    [[nodiscard]] std::size_t qubit_count() const noexcept { return n_qubits_; }
    [[nodiscard]] std::size_t blocks() const noexcept { return blocks_; }
    [[nodiscard]] CouplingMode mode() const noexcept { return mode_; }
    [[nodiscard]] std::size_t capacity() const noexcept { return slots_.size(); }
    [[nodiscard]] const std::vector<Slot> &slots() const noexcept { return slots_; }

  private:
    std::size_t n_features_ = 0;
    std::size_t n_qubits_ = 0;
    std::size_t blocks_ = 0;
    CouplingMode mode_ = CouplingMode::Scalar;
    std::vector<Slot> slots_;
};

std::size_t capacity(std::size_t n_qubits, std::size_t blocks, CouplingMode mode) noexcept;

/// Throws Error{CapacityExceeded} naming the minimal qubit and block counts.
FeatureAssignment assign_features(std::size_t p, std::size_t n_qubits, std::size_t blocks,
                                  CouplingMode mode);

/// Bond visiting order inside one repetition: odd bonds, then even bonds.
std::vector<std::size_t> bond_order(std::size_t n_qubits);

/// Throws Error{DimensionMismatch} if angles.size() != assignment.feature_count().
qsim::GateSequence build_circuit(std::span<const double> angles,
                                 const FeatureAssignment &assignment, const AnsatzConfig &config);

/// Default 3N single-site strings (X q0, Y q0, Z q0, X q1, ...) followed by
/// the configured extras. Throws Error{InvalidArgument} for bad extras.
std::vector<qsim::PauliString> observable_set(const AnsatzConfig &config);

/// Bound transform for one fitted scaler and configuration.
class Transformer {
  public:
    Transformer(AnsatzConfig config, preprocess::Scaler scaler);

    [[nodiscard]] const AnsatzConfig &config() const noexcept { return config_; }
    [[nodiscard]] const preprocess::Scaler &scaler() const noexcept { return scaler_; }
    [[nodiscard]] const FeatureAssignment &assignment() const noexcept { return assignment_; }
    [[nodiscard]] const std::vector<qsim::PauliString> &observables() const noexcept {
        return observables_;
    }
    [[nodiscard]] std::size_t output_dim() const noexcept { return observables_.size(); }

    /// Raw features to x'. Shot noise and depolarizing draws use a stream
    /// derived from (noise_seed, event_id). Drift is not applied here.
    [[nodiscard]] std::vector<double> transform(std::span<const double> features,
                                                EventId event_id = 0) const;
    /// Encoded angles to x'.
    [[nodiscard]] std::vector<double> transform_angles(std::span<const double> angles,
                                                       EventId event_id = 0) const;
    /// Expectations of the fiducial state.
    [[nodiscard]] std::vector<double> fiducial_expectations() const;

    /// Transforms every event; metadata and labels pass through unchanged.
    /// With drift configured, events are processed sequentially in order
    /// and the walk advances once per event; otherwise work is parallel.
    [[nodiscard]] EventDataset transform_batch(const EventDataset &dataset) const;

  private:
    [[nodiscard]] qsim::QuantumState evolve(std::span<const double> angles,
                                            EventId event_id) const;

    AnsatzConfig config_;
    preprocess::Scaler scaler_;
    FeatureAssignment assignment_;
    std::vector<qsim::PauliString> observables_;
    std::vector<qsim::QubitState> fiducial_;
};

} // namespace qfill::pqfm
