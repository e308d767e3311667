// SPDX-License-Identifier: Apache-2.0
#include "qfill/synth/synth.hpp"

#include "qfill/common/error.hpp"
#include "qfill/common/rng.hpp"
#include "qfill/learners/auc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qfill::synth {
namespace {

enum Stream : std::uint64_t { kLayout = 1, kClock, kWalk, kSignal, kLabels };

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct Layout {
    std::vector<std::vector<double>> loadings;  // p x K, unit rows
    std::vector<std::size_t> signal_indices;
};

Layout make_layout(const SynthConfig &c) {
    Rng rng(derive_seed(c.base_seed, {kLayout}));
    Layout layout;
    layout.loadings.assign(c.feature_count, std::vector<double>(c.factor_count));
    for (auto &row : layout.loadings) {
        double norm = 0.0;
        for (auto &v : row) {
            v = rng.normal();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto &v : row) {
            v /= norm;
        }
    }
    // Partial Fisher-Yates for k distinct indices, then sorted.
    std::vector<std::size_t> idx(c.feature_count);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < c.signal_feature_count; ++i) {
        const std::size_t j = i + rng.below(c.feature_count - i);
        std::swap(idx[i], idx[j]);
    }
    layout.signal_indices.assign(idx.begin(), idx.begin() + c.signal_feature_count);
    std::sort(layout.signal_indices.begin(), layout.signal_indices.end());
    return layout;
}

std::vector<Timestamp> make_clock(const SynthConfig &c) {
    Rng rng(derive_seed(c.base_seed, {kClock}));
    std::vector<Timestamp> ts(c.n_events);
    for (std::size_t start = 0; start < c.n_events; start += c.events_per_day) {
        const std::size_t end = std::min(c.n_events, start + c.events_per_day);
        const Timestamp day0 =
            c.start_us + static_cast<Timestamp>(start / c.events_per_day) * kMicrosPerDay;
        for (std::size_t i = start; i < end; ++i) {
            ts[i] = day0 + static_cast<Timestamp>(rng.uniform() *
                                                  static_cast<double>(c.trading_day_us));
        }
        std::sort(ts.begin() + static_cast<std::ptrdiff_t>(start),
                  ts.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return ts;
}

// Feature matrix (row per event) for a given innovation scale. The stream is
// re-seeded on every call so calibration compares common random numbers.
std::vector<std::vector<double>> walk_features(const SynthConfig &c, const Layout &layout,
                                               double innovation) {
    Rng rng(derive_seed(c.base_seed, {kWalk}));
    const double phi = std::sqrt(1.0 - innovation * innovation);
    const double wf = std::sqrt(c.factor_share);
    const double wi = std::sqrt(1.0 - c.factor_share);
    std::vector<double> factors(c.factor_count);
    std::vector<double> idio(c.feature_count);
    for (auto &f : factors) {
        f = rng.normal();
    }
    for (auto &u : idio) {
        u = rng.normal();
    }
    std::vector<std::vector<double>> x(c.n_events, std::vector<double>(c.feature_count));
    for (std::size_t i = 0; i < c.n_events; ++i) {
        if (i > 0) {
            for (auto &f : factors) {
                f = phi * f + innovation * rng.normal();
            }
            for (auto &u : idio) {
                u = phi * u + innovation * rng.normal();
            }
        }
        for (std::size_t j = 0; j < c.feature_count; ++j) {
            double common = 0.0;
            for (std::size_t k = 0; k < c.factor_count; ++k) {
                common += layout.loadings[j][k] * factors[k];
            }
            const double v = c.feature_scale * (wf * common + wi * idio[j]);
            x[i][j] = std::clamp(v, -1.0, 1.0);
        }
    }
    return x;
}

double mean_step(const std::vector<std::vector<double>> &x) {
    if (x.size() < 2 || x.front().empty()) {
        return 0.0;
    }
    const double p = static_cast<double>(x.front().size());
    double total = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        double d = 0.0;
        for (std::size_t j = 0; j < x[i].size(); ++j) {
            d += std::abs(x[i][j] - x[i - 1][j]);
        }
        total += d / p;
    }
    return total / static_cast<double>(x.size() - 1);
}

std::vector<std::vector<double>> signal_path(const SynthConfig &c,
                                             const std::vector<Timestamp> &ts) {
    Rng rng(derive_seed(c.base_seed, {kSignal}));
    const std::size_t k = c.signal_feature_count;
    std::vector<double> z(k);
    for (auto &v : z) {
        v = rng.normal();
    }
    std::vector<std::vector<double>> path(c.n_events, std::vector<double>(k));
    for (std::size_t i = 0; i < c.n_events; ++i) {
        if (i > 0 && c.signal_half_life_us) {
            const double dt = static_cast<double>(ts[i] - ts[i - 1]);
            const double rho =
                std::exp2(-dt / static_cast<double>(*c.signal_half_life_us));
            const double kick = std::sqrt(std::max(0.0, 1.0 - rho * rho));
            for (auto &v : z) {
                v = rho * v + kick * rng.normal();
            }
        }
        double norm = 0.0;
        for (double v : z) {
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (std::size_t j = 0; j < k; ++j) {
            path[i][j] = z[j] / norm;
        }
    }
    return path;
}

} // namespace

void SynthConfig::validate() const {
    auto fail = [](const std::string &what) {
        throw Error(ErrorKind::InvalidArgument, "SynthConfig: " + what);
    };
    if (n_events < 2) fail("n_events must be >= 2");
    if (feature_count < 1) fail("feature_count must be >= 1");
    if (!(label_rate_target > 0.0 && label_rate_target < 1.0))
        fail("label_rate_target must lie in (0, 1)");
    if (signal_feature_count < 1 || signal_feature_count > feature_count)
        fail("signal_feature_count must lie in [1, feature_count]");
    if (!(mean_step_change_target > 0.0)) fail("mean_step_change_target must be > 0");
    if (signal_half_life_us && *signal_half_life_us <= 0)
        fail("signal_half_life_us must be positive (null = constant signal)");
    if (trading_day_us <= 0 || trading_day_us > kMicrosPerDay)
        fail("trading_day_us must lie in (0, 24h]");
    if (events_per_day < 1) fail("events_per_day must be >= 1");
    if (factor_count < 1) fail("factor_count must be >= 1");
    if (!(feature_scale > 0.0)) fail("feature_scale must be > 0");
    if (!(factor_share >= 0.0 && factor_share <= 1.0)) fail("factor_share must lie in [0, 1]");
    if (!(signal_strength >= 0.0)) fail("signal_strength must be >= 0");
}

double GroundTruth::logit(const std::vector<double> &features,
                          const std::vector<double> &beta) const {
    double a = 0.0;
    for (std::size_t j = 0; j < signal_indices.size(); ++j) {
        a += beta[j] * features[signal_indices[j]];
    }
    return intercept + signal_strength * a / feature_scale;
}

Generated generate(const SynthConfig &c) {
    c.validate();
    const Layout layout = make_layout(c);
    const std::vector<Timestamp> ts = make_clock(c);

    // Bisection on the innovation scale; mean step grows with it.
    double lo = 1e-5;
    double hi = 0.999;
    double best_s = 0.0;
    double best_err = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> x;
    for (int iter = 0; iter < 20; ++iter) {
        const double s = 0.5 * (lo + hi);
        auto candidate = walk_features(c, layout, s);
        const double step = mean_step(candidate);
        const double err = std::abs(step - c.mean_step_change_target);
        if (err < best_err) {
            best_err = err;
            best_s = s;
            x = std::move(candidate);
        }
        if (err <= 0.005 * c.mean_step_change_target) {
            break;
        }
        (step < c.mean_step_change_target ? lo : hi) = s;
    }
    if (best_err > 0.2 * c.mean_step_change_target) {
        throw Error(ErrorKind::CalibrationFailure,
                    "mean_step_change target " + std::to_string(c.mean_step_change_target) +
                        " unreachable (closest miss " + std::to_string(best_err) + ")");
    }

    GroundTruth truth;
    truth.signal_indices = layout.signal_indices;
    truth.coefficients = signal_path(c, ts);
    truth.signal_strength = c.signal_strength;
    truth.feature_scale = c.feature_scale;

    std::vector<double> shape(c.n_events);
    for (std::size_t i = 0; i < c.n_events; ++i) {
        truth.intercept = 0.0;
        shape[i] = truth.logit(x[i], truth.coefficients[i]);
    }
    // Intercept so the mean fill probability equals the target.
    double b_lo = -30.0;
    double b_hi = 30.0;
    for (int iter = 0; iter < 80; ++iter) {
        const double b = 0.5 * (b_lo + b_hi);
        double mean = 0.0;
        for (double a : shape) {
            mean += sigmoid(b + a);
        }
        mean /= static_cast<double>(c.n_events);
        (mean < c.label_rate_target ? b_lo : b_hi) = b;
    }
    truth.intercept = 0.5 * (b_lo + b_hi);
    truth.true_probability.resize(c.n_events);
    for (std::size_t i = 0; i < c.n_events; ++i) {
        truth.true_probability[i] =
            std::clamp(sigmoid(truth.intercept + shape[i]), 1e-12, 1.0 - 1e-12);
    }

    std::vector<int> labels(c.n_events);
    bool calibrated = false;
    for (std::uint64_t attempt = 0; attempt < 10 && !calibrated; ++attempt) {
        Rng rng(derive_seed(c.base_seed, {kLabels, attempt}));
        std::size_t positives = 0;
        for (std::size_t i = 0; i < c.n_events; ++i) {
            labels[i] = rng.bernoulli(truth.true_probability[i]) ? 1 : 0;
            positives += static_cast<std::size_t>(labels[i]);
        }
        const double rate = static_cast<double>(positives) / static_cast<double>(c.n_events);
        calibrated = std::abs(rate - c.label_rate_target) <= 0.03;
    }
    if (!calibrated) {
        throw Error(ErrorKind::CalibrationFailure,
                    "label rate not within 3 percentage points of target after 10 draws");
    }

    std::vector<TradeEvent> events(c.n_events);
    for (std::size_t i = 0; i < c.n_events; ++i) {
        events[i].timestamp = ts[i];
        events[i].event_id = static_cast<EventId>(i + 1);
        events[i].features = std::move(x[i]);
        events[i].label = labels[i];
    }
    return {EventDataset(std::move(events), c.feature_count, {}, "synthetic"),
            std::move(truth), best_s};
}

nlohmann::json plant_report(const GroundTruth &truth, const EventDataset &dataset,
                            std::size_t buckets) {
    if (truth.true_probability.size() != dataset.size()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "ground truth and dataset differ in event count");
    }
    const bool has_path = truth.coefficients.size() == dataset.size();
    std::vector<double> ceiling_sum(buckets, 0.0), blinded_sum(buckets, 0.0);
    std::vector<std::size_t> ceiling_n(buckets, 0), blinded_n(buckets, 0);

    const auto &ev = dataset.events();
    auto day_of = [](Timestamp t) {
        return t >= 0 ? t / kMicrosPerDay : -((-t - 1) / kMicrosPerDay) - 1;
    };
    for (std::size_t o = 1; o < ev.size(); ++o) {
        if (day_of(ev[o].timestamp) == day_of(ev[o - 1].timestamp)) {
            continue;
        }
        const Timestamp t_end = ev[o - 1].timestamp;
        std::vector<std::vector<double>> truth_scores(buckets), stale_scores(buckets);
        std::vector<std::vector<int>> labels(buckets);
        for (std::size_t i = o; i < ev.size(); ++i) {
            const Timestamp delta = ev[i].timestamp - t_end;
            const auto b = static_cast<std::size_t>(delta / kMicrosPerDay);
            if (b >= buckets) {
                break;
            }
            if (!ev[i].label || delta < 1) {
                continue;
            }
            labels[b].push_back(*ev[i].label);
            truth_scores[b].push_back(truth.true_probability[i]);
            if (has_path) {
                stale_scores[b].push_back(truth.logit(ev[i].features, truth.coefficients[o - 1]));
            }
        }
        for (std::size_t b = 0; b < buckets; ++b) {
            if (auto a = learners::try_auc(truth_scores[b], labels[b])) {
                ceiling_sum[b] += *a;
                ++ceiling_n[b];
            }
            if (has_path) {
                if (auto a = learners::try_auc(stale_scores[b], labels[b])) {
                    blinded_sum[b] += *a;
                    ++blinded_n[b];
                }
            }
        }
    }

    std::vector<int> all_labels;
    std::vector<double> all_truth;
    for (std::size_t i = 0; i < ev.size(); ++i) {
        if (ev[i].label) {
            all_labels.push_back(*ev[i].label);
            all_truth.push_back(truth.true_probability[i]);
        }
    }
    nlohmann::json out;
    auto overall = learners::try_auc(all_truth, all_labels);
    out["overall_ceiling_auc"] = overall ? nlohmann::json(*overall) : nlohmann::json(nullptr);
    out["buckets"] = nlohmann::json::array();
    for (std::size_t b = 0; b < buckets; ++b) {
        nlohmann::json row;
        row["bucket"] = b;
        row["n_origins"] = ceiling_n[b];
        row["ceiling_auc"] = ceiling_n[b] ? nlohmann::json(ceiling_sum[b] / ceiling_n[b])
                                          : nlohmann::json(nullptr);
        row["blinded_ceiling_auc"] = blinded_n[b]
                                         ? nlohmann::json(blinded_sum[b] / blinded_n[b])
                                         : nlohmann::json(nullptr);
        out["buckets"].push_back(row);
    }
    return out;
}

SynthConfig config_from_json(const nlohmann::json &j) {
    SynthConfig c;
    try {
        c.n_events = j.value("n_events", c.n_events);
        c.feature_count = j.value("feature_count", c.feature_count);
        c.label_rate_target = j.value("label_rate_target", c.label_rate_target);
        c.mean_step_change_target = j.value("mean_step_change_target", c.mean_step_change_target);
        c.signal_feature_count = j.value("signal_feature_count", c.signal_feature_count);
        if (j.contains("signal_half_life_us")) {
            const auto &h = j.at("signal_half_life_us");
            c.signal_half_life_us =
                h.is_null() ? std::nullopt : std::optional<Timestamp>(h.get<Timestamp>());
        }
        c.trading_day_us = j.value("trading_day_us", c.trading_day_us);
        c.events_per_day = j.value("events_per_day", c.events_per_day);
        c.factor_count = j.value("factor_count", c.factor_count);
        c.signal_strength = j.value("signal_strength", c.signal_strength);
        c.feature_scale = j.value("feature_scale", c.feature_scale);
        c.factor_share = j.value("factor_share", c.factor_share);
        c.start_us = j.value("start_us", c.start_us);
        c.base_seed = j.value("base_seed", c.base_seed);
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorKind::ConfigParse, std::string("synth config: ") + e.what());
    }
    c.validate();
    return c;
}

nlohmann::json to_json(const SynthConfig &c) {
    return {{"n_events", c.n_events},
            {"feature_count", c.feature_count},
            {"label_rate_target", c.label_rate_target},
            {"mean_step_change_target", c.mean_step_change_target},
            {"signal_feature_count", c.signal_feature_count},
            {"signal_half_life_us", c.signal_half_life_us
                                        ? nlohmann::json(*c.signal_half_life_us)
                                        : nlohmann::json(nullptr)},
            {"trading_day_us", c.trading_day_us},
            {"events_per_day", c.events_per_day},
            {"factor_count", c.factor_count},
            {"signal_strength", c.signal_strength},
            {"feature_scale", c.feature_scale},
            {"factor_share", c.factor_share},
            {"start_us", c.start_us},
            {"base_seed", c.base_seed}};
}

nlohmann::json to_json(const GroundTruth &t) {
    return {{"signal_indices", t.signal_indices},
            {"intercept", t.intercept},
            {"signal_strength", t.signal_strength},
            {"feature_scale", t.feature_scale},
            {"coefficients", t.coefficients},
            {"true_probability", t.true_probability}};
}

} // namespace qfill::synth
