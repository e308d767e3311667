// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "qfill/qsim/gates.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace qfill::qsim {

using QubitState = std::array<cplx, 2>;

/// Haar-random single-qubit states for qubits 0..n-1, drawn in qubit order
/// from one stream seeded by `seed`.
std::vector<QubitState> fiducial_qubits(std::size_t n_qubits, std::uint64_t seed);

/// Full 2^N statevector. Practical up to about 24 qubits.
class DenseState {
  public:
    static constexpr std::size_t kMaxQubits = 28;

    explicit DenseState(std::size_t n_qubits);  // |0...0>
    static DenseState product(std::span<const QubitState> qubits);

    [[nodiscard]] std::size_t qubit_count() const noexcept { return n_; }
    [[nodiscard]] std::span<const cplx> amplitudes() const noexcept { return amps_; }
    [[nodiscard]] std::span<cplx> amplitudes() noexcept { return amps_; }

    void apply(const GateOp &gate);
    void apply_1q(unsigned site, const Mat2 &m);
    void apply_2q(unsigned site_a, unsigned site_b, const Mat4 &m);

    [[nodiscard]] double expectation(const PauliString &p) const;
    [[nodiscard]] double norm() const;

  private:
    std::size_t n_ = 0;
    std::vector<cplx> amps_;
};

struct MpsOptions {
    std::size_t max_bond = 64;
    double truncation_tol = 1e-12;
};

/// Open-boundary matrix product state with a single orthogonality center.
/// Two-qubit gates must act on neighbouring sites.
class MpsState {
  public:
    using Tensor = std::array<Eigen::MatrixXcd, 2>;  // [physical](left, right)

    explicit MpsState(std::size_t n_qubits, MpsOptions options = {});
    static MpsState product(std::span<const QubitState> qubits, MpsOptions options = {});

    [[nodiscard]] std::size_t qubit_count() const noexcept { return sites_.size(); }
    [[nodiscard]] const MpsOptions &options() const noexcept { return options_; }

    void apply(const GateOp &gate);
    void apply_1q(unsigned site, const Mat2 &m);
    /// Throws Error{NonAdjacentSites}.
    void apply_2q(unsigned site_a, unsigned site_b, const Mat4 &m);

    [[nodiscard]] double expectation(const PauliString &p) const;
    [[nodiscard]] std::vector<double> expectations(std::span<const PauliString> ps) const;
    [[nodiscard]] double norm() const;

    [[nodiscard]] std::size_t max_bond_dimension() const noexcept;
    /// Sum of squared singular values discarded so far.
    [[nodiscard]] double truncated_weight() const noexcept { return truncated_weight_; }

    /// Contracts to a dense statevector (little-endian). Small N only.
    [[nodiscard]] std::vector<cplx> to_amplitudes() const;

  private:
    void move_center(std::size_t target);
    void shift_right();
    void shift_left();
    double contract_from_center(const PauliString &p) const;

    std::vector<Tensor> sites_;
    std::size_t center_ = 0;
    MpsOptions options_;
    double truncated_weight_ = 0.0;
};

enum class Backend { Dense, Mps };

std::string_view to_string(Backend b) noexcept;
/// Throws Error{InvalidArgument}.
Backend backend_from_string(std::string_view s);

using QuantumState = std::variant<DenseState, MpsState>;

QuantumState make_product_state(Backend backend, std::span<const QubitState> qubits,
                                MpsOptions options = {});
void apply_gate(QuantumState &state, const GateOp &gate);
void apply_gates(QuantumState &state, const GateSequence &gates);
std::vector<double> expectations(const QuantumState &state, std::span<const PauliString> ps);
double norm(const QuantumState &state);

} // namespace qfill::qsim
