// SPDX-License-Identifier: Apache-2.0
#include "qfill/qsim/state.hpp"

#include "qfill/common/error.hpp"
#include "qfill/common/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace qfill::qsim {

std::vector<QubitState> fiducial_qubits(std::size_t n_qubits, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<QubitState> out(n_qubits);
    for (auto &q : out) {
        const double a = rng.normal(), b = rng.normal(), c = rng.normal(), d = rng.normal();
        const double r = std::sqrt(a * a + b * b + c * c + d * d);
        q = {cplx(a / r, b / r), cplx(c / r, d / r)};
    }
    return out;
}

// ---------------------------------------------------------------- dense

DenseState::DenseState(std::size_t n_qubits) : n_(n_qubits) {
    if (n_qubits == 0 || n_qubits > kMaxQubits) {
        throw Error(ErrorKind::InvalidArgument,
                    "dense backend supports 1.." + std::to_string(kMaxQubits) + " qubits");
    }
    amps_.assign(std::size_t{1} << n_qubits, cplx{});
    amps_[0] = 1.0;
}

DenseState DenseState::product(std::span<const QubitState> qubits) {
    DenseState s(qubits.size());
    const std::size_t dim = s.amps_.size();
    for (std::size_t i = 0; i < dim; ++i) {
        cplx a = 1.0;
        for (std::size_t q = 0; q < qubits.size(); ++q) {
            a *= qubits[q][(i >> q) & 1U];
        }
        s.amps_[i] = a;
    }
    return s;
}

void DenseState::apply_1q(unsigned site, const Mat2 &m) {
    if (site >= n_) {
        throw Error(ErrorKind::InvalidArgument, "gate site out of range");
    }
    simd::apply_1q(amps_, site, m);
}

void DenseState::apply_2q(unsigned site_a, unsigned site_b, const Mat4 &m) {
    if (site_a >= n_ || site_b >= n_ || site_a == site_b) {
        throw Error(ErrorKind::InvalidArgument, "invalid two-qubit gate sites");
    }
    if (site_a < site_b) {
        simd::apply_2q(amps_, site_a, site_b, m);
    } else {
        simd::apply_2q(amps_, site_b, site_a, swap_sites(m));
    }
}

void DenseState::apply(const GateOp &gate) {
    std::visit(
        [this](const auto &g) {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, SingleQubitUnitary>) {
                apply_1q(g.site, g.matrix);
            } else if constexpr (std::is_same_v<T, PairRotation>) {
                apply_2q(g.site_a, g.site_b, pair_rotation_matrix(g.axis, g.theta));
            } else {
                apply_2q(g.site_a, g.site_b, g.matrix);
            }
        },
        gate);
}

double DenseState::expectation(const PauliString &p) const {
    p.validate(n_);
    if (p.locality() == 1) {
        const auto [site, op] = p.terms().front();
        const auto m = simd::qubit_moments(amps_, site);
        switch (op) {
        case Pauli::X: return 2.0 * m.c01.real();
        case Pauli::Y: return 2.0 * m.c01.imag();
        default: return m.p0 - m.p1;
        }
    }
    // P|i> = i^ny (-1)^popcount(i & phase) |i ^ flip>
    std::size_t flip = 0, phase = 0;
    int ny = 0;
    for (const auto &[site, op] : p.terms()) {
        const std::size_t bit = std::size_t{1} << site;
        if (op != Pauli::Z) {
            flip |= bit;
        }
        if (op != Pauli::X) {
            phase |= bit;
        }
        ny += op == Pauli::Y;
    }
    cplx acc = 0.0;
    for (std::size_t i = 0; i < amps_.size(); ++i) {
        const cplx term = std::conj(amps_[i ^ flip]) * amps_[i];
        acc += (std::popcount(i & phase) & 1) ? -term : term;
    }
    static const cplx ipow[4] = {1.0, cplx(0, 1), -1.0, cplx(0, -1)};
    return (ipow[ny & 3] * acc).real();
}

double DenseState::norm() const { return std::sqrt(simd::norm_sq(amps_)); }

// ---------------------------------------------------------------- mps

namespace {

using Eigen::MatrixXcd;

MatrixXcd local_op(Pauli p) {
    const Mat2 m = pauli_matrix(p);
    MatrixXcd o(2, 2);
    o << m[0], m[1], m[2], m[3];
    return o;
}

} // namespace

MpsState::MpsState(std::size_t n_qubits, MpsOptions options) : options_(options) {
    if (n_qubits == 0) {
        throw Error(ErrorKind::InvalidArgument, "MPS needs at least one qubit");
    }
    if (options.max_bond == 0) {
        throw Error(ErrorKind::InvalidArgument, "max_bond must be positive");
    }
    sites_.resize(n_qubits);
    for (auto &t : sites_) {
        t[0] = MatrixXcd::Ones(1, 1);
        t[1] = MatrixXcd::Zero(1, 1);
    }
}

MpsState MpsState::product(std::span<const QubitState> qubits, MpsOptions options) {
    MpsState s(qubits.size(), options);
    for (std::size_t q = 0; q < qubits.size(); ++q) {
        s.sites_[q][0](0, 0) = qubits[q][0];
        s.sites_[q][1](0, 0) = qubits[q][1];
    }
    return s;
}

void MpsState::shift_right() {
    auto &a = sites_[center_];
    auto &b = sites_[center_ + 1];
    const auto dl = a[0].rows(), dr = a[0].cols();
    MatrixXcd m(2 * dl, dr);
    m << a[0], a[1];
    Eigen::HouseholderQR<MatrixXcd> qr(m);
    const auto r = std::min<Eigen::Index>(2 * dl, dr);
    const MatrixXcd q = qr.householderQ() * MatrixXcd::Identity(2 * dl, r);
    const MatrixXcd rr =
        qr.matrixQR().topRows(r).template triangularView<Eigen::Upper>();
    a[0] = q.topRows(dl);
    a[1] = q.bottomRows(dl);
    b[0] = rr * b[0];
    b[1] = rr * b[1];
    ++center_;
}

void MpsState::shift_left() {
    auto &a = sites_[center_ - 1];
    auto &b = sites_[center_];
    const auto dl = b[0].rows(), dr = b[0].cols();
    MatrixXcd m(2 * dr, dl);  // m = [B0 B1]^dagger
    m << b[0].adjoint(), b[1].adjoint();
    Eigen::HouseholderQR<MatrixXcd> qr(m);
    const auto r = std::min<Eigen::Index>(2 * dr, dl);
    const MatrixXcd q = qr.householderQ() * MatrixXcd::Identity(2 * dr, r);
    const MatrixXcd rr =
        qr.matrixQR().topRows(r).template triangularView<Eigen::Upper>();
    b[0] = q.topRows(dr).adjoint();
    b[1] = q.bottomRows(dr).adjoint();
    const MatrixXcd rd = rr.adjoint();
    a[0] = a[0] * rd;
    a[1] = a[1] * rd;
    --center_;
}

void MpsState::move_center(std::size_t target) {
    while (center_ < target) {
        shift_right();
    }
    while (center_ > target) {
        shift_left();
    }
}

void MpsState::apply_1q(unsigned site, const Mat2 &m) {
    if (site >= sites_.size()) {
        throw Error(ErrorKind::InvalidArgument, "gate site out of range");
    }
    auto &t = sites_[site];
    const MatrixXcd n0 = m[0] * t[0] + m[1] * t[1];
    const MatrixXcd n1 = m[2] * t[0] + m[3] * t[1];
    t[0] = n0;
    t[1] = n1;
}

void MpsState::apply_2q(unsigned site_a, unsigned site_b, const Mat4 &m_in) {
    const std::size_t n = sites_.size();
    if (site_a >= n || site_b >= n) {
        throw Error(ErrorKind::InvalidArgument, "gate site out of range");
    }
    if (site_a + 1 != site_b && site_b + 1 != site_a) {
        throw Error(ErrorKind::NonAdjacentSites,
                    "sites " + std::to_string(site_a) + " and " + std::to_string(site_b) +
                        " are not neighbours");
    }
    const unsigned j = std::min(site_a, site_b);
    const Mat4 m = site_a < site_b ? m_in : swap_sites(m_in);
    move_center(j);
    auto &a = sites_[j];
    auto &b = sites_[j + 1];
    const auto dl = a[0].rows(), dr = b[0].cols();

    MatrixXcd theta[2][2];
    for (int s1 = 0; s1 < 2; ++s1) {
        for (int s2 = 0; s2 < 2; ++s2) {
            theta[s1][s2] = a[s1] * b[s2];
        }
    }
    MatrixXcd big = MatrixXcd::Zero(2 * dl, 2 * dr);
    for (int t1 = 0; t1 < 2; ++t1) {
        for (int t2 = 0; t2 < 2; ++t2) {
            auto blk = big.block(t1 * dl, t2 * dr, dl, dr);
            for (int s1 = 0; s1 < 2; ++s1) {
                for (int s2 = 0; s2 < 2; ++s2) {
                    const cplx g = m[4 * (t1 + 2 * t2) + (s1 + 2 * s2)];
                    if (g != cplx{}) {
                        blk += g * theta[s1][s2];
                    }
                }
            }
        }
    }

    Eigen::BDCSVD<MatrixXcd> svd(big, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto &sv = svd.singularValues();
    Eigen::Index keep = 0;
    while (keep < sv.size() && keep < static_cast<Eigen::Index>(options_.max_bond) &&
           sv[keep] > options_.truncation_tol) {
        ++keep;
    }
    keep = std::max<Eigen::Index>(keep, 1);
    double kept = 0.0, total = 0.0;
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
        total += sv[k] * sv[k];
        if (k < keep) {
            kept += sv[k] * sv[k];
        }
    }
    truncated_weight_ += total - kept;
    const double renorm = 1.0 / std::sqrt(kept);

    const MatrixXcd u = svd.matrixU().leftCols(keep);
    MatrixXcd sv_dag = svd.matrixV().leftCols(keep).adjoint();
    for (Eigen::Index k = 0; k < keep; ++k) {
        sv_dag.row(k) *= sv[k] * renorm;
    }
    a[0] = u.topRows(dl);
    a[1] = u.bottomRows(dl);
    b[0] = sv_dag.leftCols(dr);
    b[1] = sv_dag.rightCols(dr);
    center_ = j + 1;
}

void MpsState::apply(const GateOp &gate) {
    std::visit(
        [this](const auto &g) {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, SingleQubitUnitary>) {
                apply_1q(g.site, g.matrix);
            } else if constexpr (std::is_same_v<T, PairRotation>) {
                apply_2q(g.site_a, g.site_b, pair_rotation_matrix(g.axis, g.theta));
            } else {
                apply_2q(g.site_a, g.site_b, g.matrix);
            }
        },
        gate);
}

double MpsState::contract_from_center(const PauliString &p) const {
    // Sites left of the center are left-canonical and right of it
    // right-canonical, so the environment outside [first, last] is identity.
    const auto &terms = p.terms();
    std::size_t ti = 0;
    MatrixXcd env;
    for (std::size_t k = p.first_site(); k <= p.last_site(); ++k) {
        Pauli op = Pauli::I;
        if (ti < terms.size() && terms[ti].first == k) {
            op = terms[ti++].second;
        }
        const MatrixXcd o = local_op(op);
        const auto &t = sites_[k];
        MatrixXcd next = MatrixXcd::Zero(t[0].cols(), t[0].cols());
        for (int r = 0; r < 2; ++r) {
            for (int c = 0; c < 2; ++c) {
                if (o(r, c) == cplx{}) {
                    continue;
                }
                if (k == p.first_site()) {
                    next.noalias() += o(r, c) * (t[r].adjoint() * t[c]);
                } else {
                    next.noalias() += o(r, c) * (t[r].adjoint() * env * t[c]);
                }
            }
        }
        env = std::move(next);
    }
    return env.trace().real();
}

std::vector<double> MpsState::expectations(std::span<const PauliString> ps) const {
    for (const auto &p : ps) {
        p.validate(sites_.size());
    }
    std::vector<std::size_t> order(ps.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return ps[a].first_site() < ps[b].first_site();
    });
    MpsState work = *this;
    std::vector<double> out(ps.size());
    for (std::size_t idx : order) {
        work.move_center(ps[idx].first_site());
        out[idx] = work.contract_from_center(ps[idx]);
    }
    return out;
}

double MpsState::expectation(const PauliString &p) const {
    return expectations(std::span<const PauliString>(&p, 1)).front();
}

double MpsState::norm() const {
    const auto &t = sites_[center_];
    return std::sqrt(t[0].squaredNorm() + t[1].squaredNorm());
}

std::size_t MpsState::max_bond_dimension() const noexcept {
    std::size_t d = 1;
    for (const auto &t : sites_) {
        d = std::max<std::size_t>(d, static_cast<std::size_t>(t[0].cols()));
    }
    return d;
}

std::vector<cplx> MpsState::to_amplitudes() const {
    if (sites_.size() > DenseState::kMaxQubits) {
        throw Error(ErrorKind::InvalidArgument, "too many qubits to contract densely");
    }
    MatrixXcd v(2, sites_[0][0].cols());
    v << sites_[0][0], sites_[0][1];
    for (std::size_t k = 1; k < sites_.size(); ++k) {
        const auto rows = v.rows();
        MatrixXcd next(2 * rows, sites_[k][0].cols());
        next.topRows(rows) = v * sites_[k][0];
        next.bottomRows(rows) = v * sites_[k][1];
        v = std::move(next);
    }
    std::vector<cplx> out(static_cast<std::size_t>(v.rows()));
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        out[static_cast<std::size_t>(i)] = v(i, 0);
    }
    return out;
}

// ---------------------------------------------------------------- variant

std::string_view to_string(Backend b) noexcept { return b == Backend::Dense ? "dense" : "mps"; }

Backend backend_from_string(std::string_view s) {
    if (s == "dense") {
        return Backend::Dense;
    }
    if (s == "mps") {
        return Backend::Mps;
    }
    throw Error(ErrorKind::InvalidArgument, "unknown backend '" + std::string(s) + "'");
}

QuantumState make_product_state(Backend backend, std::span<const QubitState> qubits,
                                MpsOptions options) {
    if (backend == Backend::Dense) {
        return DenseState::product(qubits);
    }
    return MpsState::product(qubits, options);
}

void apply_gate(QuantumState &state, const GateOp &gate) {
    std::visit([&](auto &s) { s.apply(gate); }, state);
}

void apply_gates(QuantumState &state, const GateSequence &gates) {
    std::visit(
        [&](auto &s) {
            for (const auto &g : gates) {
                s.apply(g);
            }
        },
        state);
}

std::vector<double> expectations(const QuantumState &state, std::span<const PauliString> ps) {
    if (const auto *m = std::get_if<MpsState>(&state)) {
        return m->expectations(ps);
    }
    const auto &d = std::get<DenseState>(state);
    std::vector<double> out;
    out.reserve(ps.size());
    for (const auto &p : ps) {
        out.push_back(d.expectation(p));
    }
    return out;
}

double norm(const QuantumState &state) {
    return std::visit([](const auto &s) { return s.norm(); }, state);
}

} // namespace qfill::qsim
