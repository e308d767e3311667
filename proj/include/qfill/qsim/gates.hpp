// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "qfill/simd/kernels.hpp"

#include <cstddef>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace qfill::qsim {

using simd::cplx;
using simd::Mat2;
using simd::Mat4;

enum class Pauli { I, X, Y, Z };

Mat2 pauli_matrix(Pauli p) noexcept;
char to_char(Pauli p) noexcept;

/// Tensor product of Pauli operators on distinct sites; locality b is the
/// number of non-identity factors.
class PauliString {
  public:
    PauliString() = default;
    /// Terms are sorted by site. Throws Error{InvalidArgument} on repeated
    /// sites or identity factors.
    explicit PauliString(std::vector<std::pair<unsigned, Pauli>> terms);

    static PauliString single(unsigned site, Pauli p);
    static PauliString pair(unsigned site_a, Pauli pa, unsigned site_b, Pauli pb);

    [[nodiscard]] const std::vector<std::pair<unsigned, Pauli>> &terms() const noexcept {
        return terms_;
    }
    [[nodiscard]] std::size_t locality() const noexcept { return terms_.size(); }
    [[nodiscard]] unsigned first_site() const { return terms_.front().first; }
    [[nodiscard]] unsigned last_site() const { return terms_.back().first; }
    /// Throws Error{InvalidArgument} unless 1 <= b and all sites < n_qubits.
    void validate(std::size_t n_qubits) const;
    /// e.g. "X3" or "Z0Z1".
    [[nodiscard]] std::string name() const;

    /// Parses the name() form.
    static PauliString parse(const std::string &text);

  private:
    std::vector<std::pair<unsigned, Pauli>> terms_;
};

enum class Axis { XX, YY, ZZ };

Pauli axis_pauli(Axis axis) noexcept;

struct SingleQubitUnitary {
    Mat2 matrix{};
    unsigned site = 0;
};

/// exp(-i (theta / 2) P (x) P) on (site_a, site_b).
struct PairRotation {
    Axis axis = Axis::ZZ;
    double theta = 0.0;
    unsigned site_a = 0;
    unsigned site_b = 1;
};

/// Arbitrary two-qubit unitary in the local basis bit(site_a) | bit(site_b) << 1.
/// Produced by gate fusion.
struct PairUnitary {
    Mat4 matrix{};
    unsigned site_a = 0;
    unsigned site_b = 1;
};

using GateOp = std::variant<SingleQubitUnitary, PairRotation, PairUnitary>;
using GateSequence = std::vector<GateOp>;

/// Local-basis matrix of exp(-i (theta / 2) P (x) P).
Mat4 pair_rotation_matrix(Axis axis, double theta) noexcept;

/// Kronecker product with `a` acting on the low local bit.
Mat4 kron(const Mat2 &low, const Mat2 &high) noexcept;
Mat4 matmul(const Mat4 &a, const Mat4 &b) noexcept;
/// Same operator expressed with the two sites' roles exchanged.
Mat4 swap_sites(const Mat4 &m) noexcept;

bool is_unitary(const Mat2 &m, double tol = 1e-12) noexcept;

/// Merges runs of consecutive two-qubit gates acting on the same site pair
/// into single PairUnitary gates. Exact up to rounding.
GateSequence fuse_pair_gates(const GateSequence &gates);

} // namespace qfill::qsim
