// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include "qfill/common/error.hpp"
#include "qfill/synth/synth.hpp"

#include <cmath>

using namespace qfill;
using namespace qfill::synth;

namespace {

double pairwise_auc(const std::vector<double> &s, const std::vector<int> &y) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[i] == 1 && y[j] == 0) {
                num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
                den += 1.0;
            }
        }
    }
    return num / den;
}

SynthConfig small_config(std::uint64_t seed) {
    SynthConfig c;
    c.n_events = 3000;
    c.feature_count = 20;
    c.signal_feature_count = 6;
    c.events_per_day = 300;
    c.base_seed = seed;
    return c;
}

} // namespace

TEST_CASE("generate: defaults hit the published sample statistics") {
    SynthConfig c;
    c.base_seed = 1;
    const auto g = generate(c);
    const auto s = summarize(g.dataset);
    CHECK(g.dataset.size() == 16000);
    CHECK(g.dataset.feature_count() == 216);
    CHECK(s.label_rate >= 0.34);
    CHECK(s.label_rate <= 0.40);
    CHECK(std::abs(s.mean_step_change - 0.05) <= 0.2 * 0.05);
    for (const auto &e : g.dataset.events()) {
        for (double v : e.features) {
            REQUIRE(v >= -1.0);
            REQUIRE(v <= 1.0);
        }
    }
    for (double p : g.truth.true_probability) {
        REQUIRE(p > 0.0);
        REQUIRE(p < 1.0);
    }
}

TEST_CASE("generate: deterministic in the config") {
    const auto a = generate(small_config(4)), b = generate(small_config(4));
    CHECK(to_csv(a.dataset) == to_csv(b.dataset));
    CHECK(to_json(a.truth).dump() == to_json(b.truth).dump());
    const auto c = generate(small_config(5));
    CHECK(to_csv(a.dataset) != to_csv(c.dataset));
}

TEST_CASE("config validation") {
    SynthConfig c;
    c.label_rate_target = 1.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = SynthConfig{};
    c.signal_feature_count = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = SynthConfig{};
    c.n_events = 1;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("config json round trip") {
    auto c = small_config(9);
    c.signal_half_life_us = std::nullopt;
    const auto back = config_from_json(to_json(c));
    CHECK(to_json(back).dump() == to_json(c).dump());
    CHECK_FALSE(back.signal_half_life_us.has_value());
}

TEST_CASE("plant_report: trivial truths") {
    std::vector<TradeEvent> ev;
    GroundTruth t;
    for (int i = 0; i < 40; ++i) {
        const int y = i % 2;
        ev.push_back({static_cast<Timestamp>(i) * kMicrosPerHour * 3 + 1,
                      static_cast<EventId>(i + 1), {0.0}, y});
        t.true_probability.push_back(0.5);
    }
    const EventDataset d(ev, 1);
    CHECK(plant_report(t, d)["overall_ceiling_auc"].get<double>() == 0.5);
    for (std::size_t i = 0; i < ev.size(); ++i) {
        t.true_probability[i] = *ev[i].label ? 0.9 : 0.1;
    }
    const auto r = plant_report(t, d);
    CHECK(r["overall_ceiling_auc"].get<double>() == 1.0);
    CHECK(r["buckets"][0]["ceiling_auc"].get<double>() == 1.0);
    CHECK(r["buckets"][0]["blinded_ceiling_auc"].is_null());
}

TEST_CASE("plant_report: ceilings match a pairwise oracle") {
    const auto g = generate(small_config(2));
    const auto &ev = g.dataset.events();
    const std::size_t buckets = 5;
    std::vector<double> sum(buckets, 0.0);
    std::vector<std::size_t> cnt(buckets, 0);
    for (std::size_t o = 1; o < ev.size(); ++o) {
        if (ev[o].timestamp / kMicrosPerDay == ev[o - 1].timestamp / kMicrosPerDay) {
            continue;
        }
        for (std::size_t b = 0; b < buckets; ++b) {
            std::vector<double> s;
            std::vector<int> y;
            for (std::size_t i = o; i < ev.size(); ++i) {
                const auto delta = ev[i].timestamp - ev[o - 1].timestamp;
                if (ev[i].label && delta / kMicrosPerDay == static_cast<Timestamp>(b)) {
                    s.push_back(g.truth.true_probability[i]);
                    y.push_back(*ev[i].label);
                }
            }
            const auto pos = std::count(y.begin(), y.end(), 1);
            if (pos > 0 && pos < static_cast<long>(y.size())) {
                sum[b] += pairwise_auc(s, y);
                ++cnt[b];
            }
        }
    }
    const auto r = plant_report(g.truth, g.dataset, buckets);
    for (std::size_t b = 0; b < buckets; ++b) {
        CAPTURE(b);
        REQUIRE(cnt[b] > 0);
        CHECK(r["buckets"][b]["n_origins"].get<std::size_t>() == cnt[b]);
        CHECK(r["buckets"][b]["ceiling_auc"].get<double>() ==
              doctest::Approx(sum[b] / static_cast<double>(cnt[b])).epsilon(1e-12));
    }
}

TEST_CASE("longer half-life never lowers the bucket-0 blinded ceiling") {
    const std::vector<std::optional<Timestamp>> half_lives{
        kMicrosPerDay / 2, kMicrosPerDay, 4 * kMicrosPerDay, std::nullopt};
    int violations = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        double prev = -1.0;
        bool ok = true;
        for (const auto &h : half_lives) {
            auto c = small_config(100 + seed);
            c.signal_half_life_us = h;
            const auto g = generate(c);
            const double v =
                plant_report(g.truth, g.dataset)["buckets"][0]["blinded_ceiling_auc"].get<double>();
            ok = ok && v >= prev;
            prev = v;
        }
        violations += ok ? 0 : 1;
    }
    CHECK(violations <= 1);
}
