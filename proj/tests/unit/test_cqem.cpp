// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "support.hpp"

#include "qfill/common/error.hpp"
#include "qfill/cqem/cqem.hpp"

#include <cmath>
#include <set>

using namespace qfill;
using namespace qfill::cqem;

namespace {

/// A "quantum" twin of `d`: same ids, q = 3 features derived from the row.
EventDataset fake_quantum(const EventDataset &d) {
    std::vector<TradeEvent> ev = d.events();
    for (auto &e : ev) {
        const double s = e.features[0];
        e.features = {std::sin(s), std::cos(s), s * s};
    }
    return EventDataset(std::move(ev), 3, {"X0", "Y0", "Z0"}, "pqfm-sim");
}

} // namespace

TEST_CASE("bin_index") {
    CHECK(bin_index(-1.0, 4) == 0);
    CHECK(bin_index(-0.25, 4) == 1);
    CHECK(bin_index(0.1, 4) == 2);
    CHECK(bin_index(1.0, 4) == 3);
    CHECK(bin_index(-7.0, 4) == 0);
    CHECK(bin_index(7.0, 4) == 3);
    CHECK(compute_kappa(std::vector<double>{-1e-12, 0.0}, 2) == "0|1");
    CHECK(compute_kappa(std::vector<double>{0.11, 0.12}, 10) ==
          compute_kappa(std::vector<double>{0.13, 0.14}, 10));
    CHECK(kappa_bins(std::vector<double>{-1.0, 1.0, 0.0}, 60) ==
          std::vector<std::size_t>{0, 59, 30});
}

TEST_CASE("unify_mean") {
    const std::vector<double> u{0.25, -1.0, 0.5}, v{0.75, 1.0, 0.1};
    const auto m = unify_mean({&u, &v});
    CHECK(m[0] == 0.5);
    CHECK(m[1] == 0.0);
    CHECK(m[2] == doctest::Approx(0.3).epsilon(1e-15));

    // Identical rows come back exactly, for awkward values and group sizes.
    Rng rng(3);
    for (std::size_t n = 1; n <= 40; ++n) {
        std::vector<double> w(5);
        for (auto &x : w) {
            x = 2.0 * rng.uniform() - 1.0;
        }
        std::vector<const std::vector<double> *> rows(n, &w);
        CHECK(unify_mean(rows) == w);
    }
}

TEST_CASE("resolution and state counts") {
    CHECK(resolution(4) == 0.75);
    CHECK(resolution(10) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(resolution(30) == doctest::Approx(1.0 - 1.0 / 30.0).epsilon(1e-15));
    CHECK(resolution(60) == doctest::Approx(0.98333333333333333).epsilon(1e-15));
    CHECK(format_resolution(30) == "97%");
    CHECK(format_resolution(10) == "90%");
    CHECK_THROWS_AS(resolution(1), Error);
    CHECK(theoretical_state_count(4, 216) == doctest::Approx(216.0 * std::log10(4.0)).epsilon(1e-15));
    CHECK(std::abs(theoretical_state_count(4, 216) - 130.045) < 1e-3);
    CHECK(theoretical_state_count(10, 216) == doctest::Approx(216.0).epsilon(1e-15));
    CHECK(theoretical_state_count(7, 1) == doctest::Approx(std::log10(7.0)).epsilon(1e-15));
}

TEST_CASE("index: distinct kappas keep vectors, shared kappas average") {
    const auto c = qfill::testing::random_dataset(1, 50, 4);
    const auto q = fake_quantum(c);
    const MatchConfig cfg{1000, true};
    const auto idx = build_index(c, q, cfg);
    REQUIRE(idx.size() == 50);
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto *e = idx.find(compute_kappa(c[i].features, 1000));
        REQUIRE(e != nullptr);
        CHECK(e->count == 1);
        CHECK(e->vector == q[i].features);
    }

    const EventDataset c2({{1, 1, {0.1, 0.1}, 1}, {2, 2, {0.12, 0.11}, 0}}, 2);
    const EventDataset q2({{1, 1, {0.2, -0.4}, 1}, {2, 2, {0.6, 0.0}, 0}}, 2);
    const auto idx2 = build_index(c2, q2, {4, true});
    REQUIRE(idx2.size() == 1);
    const auto &entry = idx2.entries().begin()->second;
    CHECK(entry.count == 2);
    CHECK(entry.vector[0] == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(entry.vector[1] == doctest::Approx(-0.2).epsilon(1e-15));
}

TEST_CASE("index: mismatched samples are rejected") {
    const auto c = qfill::testing::random_dataset(2, 10, 3);
    const auto q = fake_quantum(qfill::testing::random_dataset(2, 9, 3));
    CHECK_THROWS_AS(build_index(c, q, {}), Error);
}

TEST_CASE("self match in test mode is complete") {
    const auto c = qfill::testing::random_dataset(3, 300, 5);
    const auto q = fake_quantum(c);
    for (std::size_t bins : {4, 10, 30, 60}) {
        const MatchConfig cfg{bins, false};
        const auto idx = build_index(c, q, cfg);
        const auto m = match_events(idx, c, cfg);
        REQUIRE(m.size() == c.size());
        CHECK(m.provenance() == "matched");
        for (std::size_t i = 0; i < m.size(); ++i) {
            CHECK(m[i].event_id == c[i].event_id);
            CHECK(m[i].label == c[i].label);
            CHECK(m[i].features == idx.find(compute_kappa(c[i].features, bins))->vector);
        }
        CHECK(make_report(idx, c, m, cfg).match_rate == 1.0);
    }
    // Source events are excluded by default.
    const MatchConfig strict{30, true};
    CHECK(match_events(build_index(c, q, strict), c, strict).empty());
}

TEST_CASE("coarser bins match more and resolve fewer states") {
    const auto all = qfill::testing::random_dataset(4, 3000, 3);
    std::vector<TradeEvent> sample(all.events().begin(), all.events().begin() + 1500);
    const auto c = with_events(all, sample);
    const auto q = fake_quantum(c);
    double prev_rate = 2.0;
    std::size_t prev_unique = 0;
    for (std::size_t bins : {4, 10, 30, 60}) {
        const MatchConfig cfg{bins, true};
        const auto idx = build_index(c, q, cfg);
        const auto m = match_events(idx, all, cfg);
        const auto r = make_report(idx, all, m, cfg);
        CHECK(r.pool_size == 1500);
        CHECK(r.match_rate <= prev_rate);
        CHECK(unique_kappa_count(c, bins) >= prev_unique);
        CHECK(unique_kappa_count(c, bins) == idx.size());
        prev_rate = r.match_rate;
        prev_unique = unique_kappa_count(c, bins);
    }
}

TEST_CASE("labels do not affect the index") {
    const auto c = qfill::testing::random_dataset(5, 200, 3);
    const auto q = fake_quantum(c);
    std::vector<TradeEvent> ev = c.events();
    for (auto &e : ev) {
        e.label = e.label ? std::optional<int>(1 - *e.label) : std::nullopt;
    }
    const MatchConfig cfg{10, true};
    const auto a = build_index(c, q, cfg), b = build_index(with_events(c, ev), q, cfg);
    REQUIRE(a.size() == b.size());
    for (const auto &[k, e] : a.entries()) {
        CHECK(b.find(k)->vector == e.vector);
        CHECK(b.find(k)->count == e.count);
    }
}

TEST_CASE("kappa equality partitions a dataset") {
    const auto d = qfill::testing::random_dataset(6, 500, 2);
    std::map<KappaId, std::set<EventId>> classes;
    for (const auto &e : d.events()) {
        classes[compute_kappa(e.features, 10)].insert(e.event_id);
    }
    std::size_t total = 0;
    for (const auto &[k, ids] : classes) {
        total += ids.size();
    }
    CHECK(total == d.size());
    for (const auto &e : d.events()) {
        // Every event lands in exactly the class of its own kappa.
        std::size_t hits = 0;
        for (const auto &[k, ids] : classes) {
            hits += ids.count(e.event_id);
        }
        CHECK(hits == 1);
    }
}

TEST_CASE("report json") {
    const MatchReport r{30, resolution(30), 12, 100, 40, 0.4};
    const auto j = to_json(r);
    for (const auto *key : {"n_bins", "resolution", "unique_kappas", "match_rate"}) {
        CHECK(j.contains(key));
    }
}
