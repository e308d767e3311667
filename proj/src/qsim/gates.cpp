// SPDX-License-Identifier: Apache-2.0
#include "qfill/qsim/gates.hpp"

#include "qfill/common/error.hpp"

#include <algorithm>
#include <cmath>

namespace qfill::qsim {

Mat2 pauli_matrix(Pauli p) noexcept {
    using namespace std::complex_literals;
    switch (p) {
    case Pauli::X: return {0.0, 1.0, 1.0, 0.0};
    case Pauli::Y: return {0.0, -1i, 1i, 0.0};
    case Pauli::Z: return {1.0, 0.0, 0.0, -1.0};
    case Pauli::I: break;
    }
    return {1.0, 0.0, 0.0, 1.0};
}

char to_char(Pauli p) noexcept {
    switch (p) {
    case Pauli::X: return 'X';
    case Pauli::Y: return 'Y';
    case Pauli::Z: return 'Z';
    case Pauli::I: break;
    }
    return 'I';
}

PauliString::PauliString(std::vector<std::pair<unsigned, Pauli>> terms)
    : terms_(std::move(terms)) {
    std::sort(terms_.begin(), terms_.end(),
              [](const auto &a, const auto &b) { return a.first < b.first; });
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        if (terms_[i].second == Pauli::I) {
            throw Error(ErrorKind::InvalidArgument, "Pauli string holds an identity factor");
        }
        if (i > 0 && terms_[i].first == terms_[i - 1].first) {
            throw Error(ErrorKind::InvalidArgument, "Pauli string repeats a site");
        }
    }
}

PauliString PauliString::single(unsigned site, Pauli p) { return PauliString({{site, p}}); }

PauliString PauliString::pair(unsigned site_a, Pauli pa, unsigned site_b, Pauli pb) {
    return PauliString({{site_a, pa}, {site_b, pb}});
}

void PauliString::validate(std::size_t n_qubits) const {
    if (terms_.empty()) {
        throw Error(ErrorKind::InvalidArgument, "Pauli string must have locality >= 1");
    }
    if (last_site() >= n_qubits) {
        throw Error(ErrorKind::InvalidArgument,
                    "Pauli string site " + std::to_string(last_site()) + " out of range");
    }
}

std::string PauliString::name() const {
    std::string s;
    for (const auto &[site, p] : terms_) {
        s += to_char(p);
        s += std::to_string(site);
    }
    return s;
}

PauliString PauliString::parse(const std::string &text) {
    std::vector<std::pair<unsigned, Pauli>> terms;
    std::size_t i = 0;
    while (i < text.size()) {
        Pauli p;
        switch (text[i]) {
        case 'X': p = Pauli::X; break;
        case 'Y': p = Pauli::Y; break;
        case 'Z': p = Pauli::Z; break;
        default:
            throw Error(ErrorKind::InvalidArgument, "bad Pauli string '" + text + "'");
        }
        ++i;
        std::size_t j = i;
        while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
            ++j;
        }
        if (j == i) {
            throw Error(ErrorKind::InvalidArgument, "bad Pauli string '" + text + "'");
        }
        terms.emplace_back(static_cast<unsigned>(std::stoul(text.substr(i, j - i))), p);
        i = j;
    }
    return PauliString(std::move(terms));
}

Pauli axis_pauli(Axis axis) noexcept {
    switch (axis) {
    case Axis::XX: return Pauli::X;
    case Axis::YY: return Pauli::Y;
    case Axis::ZZ: break;
    }
    return Pauli::Z;
}

Mat4 kron(const Mat2 &low, const Mat2 &high) noexcept {
    Mat4 m{};
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            m[4 * r + c] = low[2 * (r & 1) + (c & 1)] * high[2 * (r >> 1) + (c >> 1)];
        }
    }
    return m;
}

Mat4 matmul(const Mat4 &a, const Mat4 &b) noexcept {
    Mat4 m{};
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            cplx s = 0.0;
            for (int k = 0; k < 4; ++k) {
                s += a[4 * r + k] * b[4 * k + c];
            }
            m[4 * r + c] = s;
        }
    }
    return m;
}

Mat4 swap_sites(const Mat4 &m) noexcept {
    constexpr int sw[4] = {0, 2, 1, 3};
    Mat4 out{};
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            out[4 * sw[r] + sw[c]] = m[4 * r + c];
        }
    }
    return out;
}

Mat4 pair_rotation_matrix(Axis axis, double theta) noexcept {
    const Mat2 p = pauli_matrix(axis_pauli(axis));
    const Mat4 pp = kron(p, p);
    const double c = std::cos(0.5 * theta);
    const cplx s(0.0, -std::sin(0.5 * theta));
    Mat4 m{};
    for (int i = 0; i < 16; ++i) {
        m[i] = s * pp[i];
    }
    for (int d = 0; d < 4; ++d) {
        m[5 * d] += c;
    }
    return m;
}

bool is_unitary(const Mat2 &m, double tol) noexcept {
    // m^dagger m == I
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            cplx s = std::conj(m[r]) * m[c] + std::conj(m[2 + r]) * m[2 + c];
            if (std::abs(s - (r == c ? 1.0 : 0.0)) > tol) {
                return false;
            }
        }
    }
    return true;
}

GateSequence fuse_pair_gates(const GateSequence &gates) {
    GateSequence out;
    out.reserve(gates.size());
    for (const auto &g : gates) {
        PairUnitary next;
        if (const auto *r = std::get_if<PairRotation>(&g)) {
            next = {pair_rotation_matrix(r->axis, r->theta), r->site_a, r->site_b};
        } else if (const auto *u = std::get_if<PairUnitary>(&g)) {
            next = *u;
        } else {
            out.push_back(g);
            continue;
        }
        if (!out.empty()) {
            if (auto *prev = std::get_if<PairUnitary>(&out.back())) {
                if (prev->site_a == next.site_a && prev->site_b == next.site_b) {
                    prev->matrix = matmul(next.matrix, prev->matrix);
                    continue;
                }
                if (prev->site_a == next.site_b && prev->site_b == next.site_a) {
                    prev->matrix = matmul(swap_sites(next.matrix), prev->matrix);
                    continue;
                }
            }
        }
        out.push_back(next);
    }
    return out;
}

} // namespace qfill::qsim
