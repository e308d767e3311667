// SPDX-License-Identifier: Apache-2.0
#include "qfill/qsim/noise.hpp"

#include "qfill/common/error.hpp"

#include <algorithm>
#include <cmath>

namespace qfill::qsim {

std::string_view to_string(DriftMode m) noexcept {
    return m == DriftMode::RandomWalk ? "random_walk" : "none";
}

void NoiseConfig::validate() const {
    if (!(p2 >= 0.0 && p2 <= 0.5)) {
        throw Error(ErrorKind::InvalidArgument, "p2 must lie in [0, 0.5]");
    }
    if (!(readout_flip >= 0.0 && readout_flip <= 0.5)) {
        throw Error(ErrorKind::InvalidArgument, "readout_flip must lie in [0, 0.5]");
    }
    if (!(drift.step_sigma >= 0.0) || !std::isfinite(drift.step_sigma)) {
        throw Error(ErrorKind::InvalidArgument, "drift step_sigma must be >= 0");
    }
}

nlohmann::json to_json(const NoiseConfig &c) {
    return {{"p2", c.p2},
            {"readout_flip", c.readout_flip},
            {"drift", {{"mode", std::string(to_string(c.drift.mode))},
                       {"step_sigma", c.drift.step_sigma}}},
            {"noise_seed", c.noise_seed}};
}

NoiseConfig noise_from_json(const nlohmann::json &j) {
    NoiseConfig c;
    try {
        c.p2 = j.value("p2", 0.0);
        c.readout_flip = j.value("readout_flip", 0.0);
        c.noise_seed = j.value("noise_seed", std::uint64_t{0});
        if (j.contains("drift")) {
            const auto &d = j.at("drift");
            const auto mode = d.value("mode", std::string("none"));
            if (mode == "random_walk") {
                c.drift.mode = DriftMode::RandomWalk;
            } else if (mode != "none") {
                throw Error(ErrorKind::ConfigParse, "unknown drift mode '" + mode + "'");
            }
            c.drift.step_sigma = d.value("step_sigma", 0.0);
        }
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorKind::ConfigParse, std::string("noise: ") + e.what());
    }
    try {
        c.validate();
    } catch (const Error &e) {
        throw Error(ErrorKind::ConfigParse, e.what());
    }
    return c;
}

DriftWalk::DriftWalk(DriftConfig config, std::uint64_t seed) : config_(config), rng_(seed) {}

void DriftWalk::advance() {
    if (config_.mode == DriftMode::RandomWalk && config_.step_sigma > 0.0) {
        offset_ += config_.step_sigma * rng_.normal();
    }
}

void DriftWalk::apply(std::span<double> values) const {
    if (offset_ == 0.0) {
        return;
    }
    for (double &v : values) {
        v = std::clamp(v + offset_, -1.0, 1.0);
    }
}

void apply_depolarizing(QuantumState &state, unsigned site_a, unsigned site_b, double p2,
                        Rng &rng) {
    if (p2 <= 0.0 || !rng.bernoulli(p2)) {
        return;
    }
    // 1..15 encodes (Pa, Pb) with Pa = k % 4, Pb = k / 4; k = 0 is identity.
    const auto k = 1 + rng.below(15);
    const Mat2 pa = pauli_matrix(static_cast<Pauli>(k % 4));
    const Mat2 pb = pauli_matrix(static_cast<Pauli>(k / 4));
    std::visit([&](auto &s) { s.apply_2q(site_a, site_b, kron(pa, pb)); }, state);
}

void apply_gates_noisy(QuantumState &state, const GateSequence &gates, double p2, Rng &rng) {
    std::visit(
        [&](auto &s) {
            for (const auto &g : gates) {
                s.apply(g);
                if (p2 <= 0.0) {
                    continue;
                }
                if (const auto *r = std::get_if<PairRotation>(&g)) {
                    apply_depolarizing(state, r->site_a, r->site_b, p2, rng);
                } else if (const auto *u = std::get_if<PairUnitary>(&g)) {
                    apply_depolarizing(state, u->site_a, u->site_b, p2, rng);
                }
            }
        },
        state);
}

double sample_expectation(double exact, std::size_t shots, double readout_flip, Rng &rng) {
    if (shots == 0) {
        throw Error(ErrorKind::InvalidArgument, "shots must be >= 1");
    }
    const double p_plus = std::clamp(0.5 * (1.0 + exact), 0.0, 1.0);
    long long sum = 0;
    for (std::size_t s = 0; s < shots; ++s) {
        int outcome = rng.uniform() < p_plus ? 1 : -1;
        if (readout_flip > 0.0 && rng.uniform() < readout_flip) {
            outcome = -outcome;
        }
        sum += outcome;
    }
    return static_cast<double>(sum) / static_cast<double>(shots);
}

double sample_expectation(const QuantumState &state, const PauliString &p, std::size_t shots,
                          double readout_flip, Rng &rng) {
    const double exact = expectations(state, std::span<const PauliString>(&p, 1)).front();
    return sample_expectation(exact, shots, readout_flip, rng);
}

namespace {

double median(std::vector<double> v) {
    const std::size_t n = v.size();
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (n % 2 == 1) {
        return *mid;
    }
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

} // namespace

DriftProbeResult drift_statistics(const std::vector<std::vector<double>> &runs) {
    const std::size_t r = runs.size();
    if (r < 9) {
        throw Error(ErrorKind::InvalidArgument, "drift probe needs at least 9 repeats");
    }
    DriftProbeResult out;
    double step_sum = 0.0;
    for (std::size_t t = 1; t < r; ++t) {
        const auto &a = runs[t - 1];
        const auto &b = runs[t];
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            s += std::abs(b[i] - a[i]);
        }
        step_sum += a.empty() ? 0.0 : s / static_cast<double>(a.size());
    }
    out.mean_abs_step = step_sum / static_cast<double>(r - 1);

    std::vector<double> mean_obs(r, 0.0);
    for (std::size_t t = 0; t < r; ++t) {
        double s = 0.0;
        for (double v : runs[t]) {
            s += v;
        }
        mean_obs[t] = runs[t].empty() ? 0.0 : s / static_cast<double>(runs[t].size());
    }
    const auto third = static_cast<std::ptrdiff_t>(r / 3);
    const std::vector<double> first(mean_obs.begin(), mean_obs.begin() + third);
    const std::vector<double> last(mean_obs.end() - third, mean_obs.end());
    out.median_shift = median(last) - median(first);
    return out;
}

DriftProbeResult drift_probe(const FeatureTransform &transform, std::span<const double> event,
                             std::size_t repeats, const DriftConfig &drift, std::uint64_t seed) {
    if (repeats < 9) {
        throw Error(ErrorKind::InvalidArgument, "drift probe needs at least 9 repeats");
    }
    DriftWalk walk(drift, seed);
    std::vector<std::vector<double>> runs;
    runs.reserve(repeats);
    for (std::size_t t = 0; t < repeats; ++t) {
        auto x = transform(event);
        walk.apply(x);
        walk.advance();
        runs.push_back(std::move(x));
    }
    return drift_statistics(runs);
}

} // namespace qfill::qsim
