// SPDX-License-Identifier: Apache-2.0
#include "qfill/pqfm/pqfm.hpp"

#include "qfill/common/error.hpp"
#include "qfill/common/parallel.hpp"
#include "qfill/common/rng.hpp"

#include <algorithm>
#include <cmath>

namespace qfill::pqfm {

using qsim::Axis;
using qsim::PairRotation;

namespace {

// Stream tag for per-event noise draws.
constexpr std::uint64_t kEventNoise = 0x51;
constexpr std::uint64_t kDrift = 0x52;

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

} // namespace

std::string_view to_string(CouplingMode m) noexcept {
    return m == CouplingMode::Triple ? "triple" : "scalar";
}

void AnsatzConfig::validate() const {
    if (qubits < 2) {
        throw Error(ErrorKind::InvalidArgument, "ansatz needs at least 2 qubits");
    }
    if (blocks < 1) {
        throw Error(ErrorKind::InvalidArgument, "ansatz needs at least 1 block");
    }
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw Error(ErrorKind::InvalidArgument, "alpha must be positive");
    }
    if (shots && *shots == 0) {
        throw Error(ErrorKind::InvalidArgument, "shots must be >= 1");
    }
    if (backend == qsim::Backend::Dense && qubits > qsim::DenseState::kMaxQubits) {
        throw Error(ErrorKind::InvalidArgument, "too many qubits for the dense backend");
    }
    if (mps.max_bond == 0) {
        throw Error(ErrorKind::InvalidArgument, "max_bond must be positive");
    }
    noise.validate();
}

AnsatzConfig preset(std::string_view name, std::size_t qubits) {
    AnsatzConfig c;
    c.qubits = qubits;
    if (name == "shorter") {
        c.blocks = 1;
        c.alpha = 1.0;
        c.seed = 1;
    } else if (name == "longer") {
        c.blocks = 2;
        c.alpha = 0.1;
        c.seed = 0;
    } else {
        throw Error(ErrorKind::UnknownPreset, "unknown preset '" + std::string(name) + "'");
    }
    return c;
}

nlohmann::json to_json(const AnsatzConfig &c) {
    nlohmann::json j = {{"qubits", c.qubits},
                        {"blocks", c.blocks},
                        {"alpha", c.alpha},
                        {"seed", c.seed},
                        {"coupling_mode", std::string(to_string(c.coupling))},
                        {"backend", std::string(qsim::to_string(c.backend))},
                        {"max_bond", c.mps.max_bond},
                        {"truncation_tol", c.mps.truncation_tol},
                        {"noise", qsim::to_json(c.noise)},
                        {"extra_observables", c.extra_observables}};
    j["shots"] = c.shots ? nlohmann::json(*c.shots) : nlohmann::json("exact");
    return j;
}

AnsatzConfig ansatz_from_json(const nlohmann::json &j) {
    if (!j.is_object()) {
        throw Error(ErrorKind::ConfigParse, "ansatz config must be a JSON object");
    }
    AnsatzConfig c;
    try {
        const auto qubits = j.value("qubits", c.qubits);
        if (j.contains("preset")) {
            c = preset(j.at("preset").get<std::string>(), qubits);
        }
        c.qubits = qubits;
        c.blocks = j.value("blocks", c.blocks);
        c.alpha = j.value("alpha", c.alpha);
        c.seed = j.value("seed", c.seed);
        if (j.contains("coupling_mode")) {
            const auto m = j.at("coupling_mode").get<std::string>();
            if (m == "triple") {
                c.coupling = CouplingMode::Triple;
            } else if (m == "scalar") {
                c.coupling = CouplingMode::Scalar;
            } else {
                throw Error(ErrorKind::ConfigParse, "unknown coupling_mode '" + m + "'");
            }
        }
        if (j.contains("backend")) {
            c.backend = qsim::backend_from_string(j.at("backend").get<std::string>());
        }
        c.mps.max_bond = j.value("max_bond", c.mps.max_bond);
        c.mps.truncation_tol = j.value("truncation_tol", c.mps.truncation_tol);
        if (j.contains("shots")) {
            const auto &s = j.at("shots");
            if (s.is_string() && s.get<std::string>() == "exact") {
                c.shots.reset();
            } else if (s.is_null()) {
                c.shots.reset();
            } else {
                c.shots = s.get<std::size_t>();
            }
        }
        if (j.contains("noise")) {
            c.noise = qsim::noise_from_json(j.at("noise"));
        }
        c.extra_observables = j.value("extra_observables", c.extra_observables);
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorKind::ConfigParse, std::string("ansatz: ") + e.what());
    } catch (const Error &e) {
        if (e.kind() == ErrorKind::UnknownPreset || e.kind() == ErrorKind::ConfigParse) {
            throw;
        }
        throw Error(ErrorKind::ConfigParse, e.what());
    }
    try {
        c.validate();
        (void)observable_set(c);
    } catch (const Error &e) {
        throw Error(ErrorKind::ConfigParse, e.what());
    }
    return c;
}

std::size_t capacity(std::size_t n_qubits, std::size_t blocks, CouplingMode mode) noexcept {
    const std::size_t per_bond = mode == CouplingMode::Triple ? 3 : 1;
    return blocks * 2 * per_bond * (n_qubits > 0 ? n_qubits - 1 : 0);
}

std::vector<std::size_t> bond_order(std::size_t n_qubits) {
    std::vector<std::size_t> order;
    for (std::size_t j = 1; j + 1 < n_qubits; j += 2) {
        order.push_back(j);
    }
    for (std::size_t j = 0; j + 1 < n_qubits; j += 2) {
        order.push_back(j);
    }
    return order;
}

FeatureAssignment::FeatureAssignment(std::size_t n_features, std::size_t n_qubits,
                                     std::size_t blocks, CouplingMode mode)
    : n_features_(n_features), n_qubits_(n_qubits), blocks_(blocks), mode_(mode) {
    const auto bonds = bond_order(n_qubits);
    for (std::size_t m = 0; m < 2 * blocks; ++m) {
        for (std::size_t j : bonds) {
            if (mode == CouplingMode::Triple) {
                for (Axis a : {Axis::XX, Axis::YY, Axis::ZZ}) {
                    slots_.push_back({m, j, a});
                }
            } else {
                slots_.push_back({m, j, Axis::XX});
            }
        }
    }
}

FeatureAssignment assign_features(std::size_t p, std::size_t n_qubits, std::size_t blocks,
                                  CouplingMode mode) {
    if (n_qubits < 2 || blocks < 1) {
        throw Error(ErrorKind::InvalidArgument, "need at least 2 qubits and 1 block");
    }
    const std::size_t cap = capacity(n_qubits, blocks, mode);
    if (p > cap) {
        const std::size_t per_bond = mode == CouplingMode::Triple ? 3 : 1;
        const std::size_t min_blocks = ceil_div(p, 2 * per_bond * (n_qubits - 1));
        const std::size_t min_qubits = ceil_div(p, 2 * per_bond * blocks) + 1;
        throw Error(ErrorKind::CapacityExceeded,
                    std::to_string(p) + " features exceed capacity " + std::to_string(cap) +
                        "; need qubits >= " + std::to_string(min_qubits) + " at blocks " +
                        std::to_string(blocks) + ", or blocks >= " +
                        std::to_string(min_blocks) + " at qubits " +
                        std::to_string(n_qubits));
    }
    return FeatureAssignment(p, n_qubits, blocks, mode);
}

qsim::GateSequence build_circuit(std::span<const double> angles,
                                 const FeatureAssignment &assignment,
                                 const AnsatzConfig &config) {
    if (angles.size() != assignment.feature_count()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "expected " + std::to_string(assignment.feature_count()) +
                        " angles, got " + std::to_string(angles.size()));
    }
    const double m_total = static_cast<double>(2 * assignment.blocks());
    const double scale = config.alpha / (2.0 * m_total);
    const auto &slots = assignment.slots();
    qsim::GateSequence gates;
    gates.reserve(assignment.mode() == CouplingMode::Triple ? slots.size() : 3 * slots.size());
    for (std::size_t k = 0; k < slots.size(); ++k) {
        const double angle = k < angles.size() ? angles[k] : 0.0;
        const auto site = static_cast<unsigned>(slots[k].bond);
        const double theta = scale * angle;
        if (assignment.mode() == CouplingMode::Triple) {
            gates.emplace_back(PairRotation{slots[k].axis, theta, site, site + 1});
        } else {
            for (Axis a : {Axis::XX, Axis::YY, Axis::ZZ}) {
                gates.emplace_back(PairRotation{a, theta, site, site + 1});
            }
        }
    }
    return gates;
}

std::vector<qsim::PauliString> observable_set(const AnsatzConfig &config) {
    std::vector<qsim::PauliString> obs;
    obs.reserve(3 * config.qubits + config.extra_observables.size());
    for (unsigned q = 0; q < config.qubits; ++q) {
        for (auto p : {qsim::Pauli::X, qsim::Pauli::Y, qsim::Pauli::Z}) {
            obs.push_back(qsim::PauliString::single(q, p));
        }
    }
    for (const auto &name : config.extra_observables) {
        auto p = qsim::PauliString::parse(name);
        p.validate(config.qubits);
        if (p.locality() > 2) {
            throw Error(ErrorKind::InvalidArgument, "observable '" + name + "' is not 1- or 2-local");
        }
        obs.push_back(std::move(p));
    }
    return obs;
}

Transformer::Transformer(AnsatzConfig config, preprocess::Scaler scaler)
    : config_(std::move(config)), scaler_(std::move(scaler)) {
    config_.validate();
    assignment_ = assign_features(scaler_.feature_count(), config_.qubits, config_.blocks,
                                  config_.coupling);
    observables_ = observable_set(config_);
    fiducial_ = qsim::fiducial_qubits(config_.qubits, config_.seed);
}

qsim::QuantumState Transformer::evolve(std::span<const double> angles, EventId event_id) const {
    auto gates = build_circuit(angles, assignment_, config_);
    auto state = qsim::make_product_state(config_.backend, fiducial_, config_.mps);
    if (config_.noise.p2 > 0.0) {
        Rng rng(derive_seed(config_.noise.noise_seed, {kEventNoise, event_id, 0}));
        qsim::apply_gates_noisy(state, gates, config_.noise.p2, rng);
    } else {
        qsim::apply_gates(state, qsim::fuse_pair_gates(gates));
    }
    return state;
}

std::vector<double> Transformer::transform_angles(std::span<const double> angles,
                                                  EventId event_id) const {
    const auto state = evolve(angles, event_id);
    auto x = qsim::expectations(state, observables_);
    if (config_.shots) {
        Rng rng(derive_seed(config_.noise.noise_seed, {kEventNoise, event_id, 1}));
        for (double &v : x) {
            v = qsim::sample_expectation(v, *config_.shots, config_.noise.readout_flip, rng);
        }
    } else if (config_.noise.readout_flip > 0.0) {
        const double s = 1.0 - 2.0 * config_.noise.readout_flip;
        for (double &v : x) {
            v *= s;
        }
    }
    for (double &v : x) {
        v = std::clamp(v, -1.0, 1.0);
    }
    return x;
}

std::vector<double> Transformer::transform(std::span<const double> features,
                                           EventId event_id) const {
    const auto angles = preprocess::encode_angles(features, scaler_);
    return transform_angles(angles, event_id);
}

std::vector<double> Transformer::fiducial_expectations() const {
    const auto state = qsim::make_product_state(config_.backend, fiducial_, config_.mps);
    return qsim::expectations(state, observables_);
}

EventDataset Transformer::transform_batch(const EventDataset &dataset) const {
    if (dataset.feature_count() != scaler_.feature_count()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "dataset has " + std::to_string(dataset.feature_count()) +
                        " features, scaler expects " + std::to_string(scaler_.feature_count()));
    }
    const auto &in = dataset.events();
    std::vector<TradeEvent> out(in.size());
    auto one = [&](std::size_t i) {
        out[i].timestamp = in[i].timestamp;
        out[i].event_id = in[i].event_id;
        out[i].label = in[i].label;
        out[i].features = transform(in[i].features, in[i].event_id);
    };
    if (config_.noise.has_drift()) {
        qsim::DriftWalk walk(config_.noise.drift, derive_seed(config_.noise.noise_seed, {kDrift}));
        for (std::size_t i = 0; i < in.size(); ++i) {
            one(i);
            walk.apply(out[i].features);
            walk.advance();
        }
    } else {
        parallel_for(in.size(), one);
    }
    std::vector<std::string> names;
    names.reserve(observables_.size());
    for (const auto &o : observables_) {
        names.push_back(o.name());
    }
    const bool noisy = config_.shots || config_.noise.p2 > 0.0 ||
                       config_.noise.readout_flip > 0.0 || config_.noise.has_drift();
    return EventDataset(std::move(out), observables_.size(), std::move(names),
                        noisy ? "pqfm-noisy" : "pqfm-sim");
}

} // namespace qfill::pqfm
