// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "support.hpp"

#include "qfill/common/digest.hpp"
#include "qfill/common/error.hpp"
#include "qfill/core/dataset.hpp"

#include <algorithm>
#include <cstring>

using namespace qfill;
using qfill::testing::random_dataset;
using qfill::testing::TempDir;

namespace {

ErrorKind kind_of(const std::string &csv) {
    try {
        (void)parse_csv(csv);
    } catch (const Error &e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::InvalidArgument;
}

std::optional<std::size_t> row_of(const std::string &csv) {
    try {
        (void)parse_csv(csv);
    } catch (const Error &e) {
        return e.row();
    }
    return std::nullopt;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

} // namespace

TEST_CASE("load: three labeled rows") {
    const auto d = parse_csv("timestamp,event_id,label,f0\n1,1,1,0.5\n2,2,0,0.25\n3,3,1,-1\n");
    CHECK(d.size() == 3);
    CHECK(d.feature_count() == 1);
    CHECK(summarize(d).label_rate == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("load: empty label cells are unlabeled") {
    const auto d = parse_csv("timestamp,event_id,label,f0\n1,1,,0.5\n2,2,1,0.25\n");
    CHECK_FALSE(d[0].label.has_value());
    const auto s = summarize(d);
    CHECK(s.n_labeled == 1);
    CHECK(s.label_rate == 1.0);
}

TEST_CASE("load: malformed files name the error and row") {
    CHECK(kind_of("timestamp,label,f0\n1,1,0.5\n") == ErrorKind::MissingColumn);
    CHECK(kind_of("timestamp,event_id,label,f0\n10,1,1,0\n10,1,0,0\n") ==
          ErrorKind::NonMonotonicTime);
    CHECK(kind_of("timestamp,event_id,label,f0\n10,1,1,0\n9,2,0,0\n") ==
          ErrorKind::NonMonotonicTime);
    CHECK(kind_of("timestamp,event_id,label,f0,f1\n1,1,1,0\n") == ErrorKind::RaggedRow);
    CHECK(kind_of("timestamp,event_id,label,f0\n1,1,2,0\n") == ErrorKind::NonBinaryLabel);
    CHECK(row_of("timestamp,event_id,label,f0\n1,1,1,0\n2,2,0,0\n3,3,7,0\n") == 2u);
}

TEST_CASE("load: equal timestamps with distinct ids are legal") {
    const auto d = parse_csv("timestamp,event_id,label,f0\n10,1,1,0\n10,2,0,0\n");
    CHECK(d.size() == 2);
}

TEST_CASE("save/load round trip is bit exact") {
    TempDir tmp;
    Rng rng(99);
    for (int k = 0; k < 100; ++k) {
        const auto n = 1 + rng.below(30);
        const auto p = 1 + rng.below(6);
        auto d = random_dataset(1000 + k, n, p, 0.2);
        // Exercise awkward magnitudes as well.
        std::vector<TradeEvent> ev = d.events();
        ev[0].features[0] = 1.0 / 3.0 * std::pow(10.0, static_cast<double>(rng.below(40)) - 20);
        d = with_events(d, ev);
        const auto path = tmp / ("d" + std::to_string(k) + ".csv");
        save_dataset(d, path);
        const auto back = load_dataset(path);
        REQUIRE(back.size() == d.size());
        REQUIRE(back.feature_count() == d.feature_count());
        for (std::size_t i = 0; i < d.size(); ++i) {
            CHECK(back[i].timestamp == d[i].timestamp);
            CHECK(back[i].event_id == d[i].event_id);
            CHECK(back[i].label == d[i].label);
            for (std::size_t j = 0; j < p; ++j) {
                CHECK(same_bits(back[i].features[j], d[i].features[j]));
            }
        }
        CHECK(to_csv(back) == to_csv(d));
    }
}

TEST_CASE("save: empty dataset and wide header") {
    TempDir tmp;
    const EventDataset empty({}, 3);
    save_dataset(empty, tmp / "e.csv");
    CHECK(read_file(tmp / "e.csv") == "timestamp,event_id,label,f0,f1,f2\n");

    const auto wide = random_dataset(5, 2, 216);
    const auto text = to_csv(wide);
    const auto header = text.substr(0, text.find('\n'));
    CHECK(std::count(header.begin(), header.end(), ',') + 1 == 219);
}

TEST_CASE("slice_window") {
    const auto d = random_dataset(7, 2000, 2);
    const auto t0 = d[0].timestamp, t1 = d[d.size() - 1].timestamp;
    CHECK(slice_window(d, t0, t1).size() == d.size());
    CHECK(slice_window(d, t1 + 1, t1 + 2).empty());
    CHECK_THROWS_AS(slice_window(d, 5, 4), Error);

    Rng rng(3);
    for (int k = 0; k < 50; ++k) {
        Timestamp a = t0 + static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(t1 - t0)));
        Timestamp c = t0 + static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(t1 - t0)));
        if (a > c) {
            std::swap(a, c);
        }
        std::size_t brute = 0;
        for (const auto &e : d.events()) {
            brute += (e.timestamp >= a && e.timestamp <= c) ? 1 : 0;
        }
        const auto ac = slice_window(d, a, c);
        CHECK(ac.size() == brute);
        if (c > a) {
            const Timestamp b = a + static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(c - a)));
            const auto ab = slice_window(d, a, b), bc = slice_window(d, b + 1, c);
            REQUIRE(ab.size() + bc.size() == ac.size());
            for (std::size_t i = 0; i < ab.size(); ++i) {
                CHECK(ab[i].event_id == ac[i].event_id);
            }
            for (std::size_t i = 0; i < bc.size(); ++i) {
                CHECK(bc[i].event_id == ac[ab.size() + i].event_id);
            }
        }
    }
}

TEST_CASE("summarize") {
    const EventDataset same({{1, 1, {0.3, 0.3}, 1}, {2, 2, {0.3, 0.3}, 0}}, 2);
    CHECK(summarize(same).mean_step_change == 0.0);

    const EventDataset step({{1, 1, {0.0, 0.0}, 1}, {2, 2, {1.0, 1.0}, 0}}, 2);
    CHECK(summarize(step).mean_step_change == 1.0);

    CHECK_THROWS_AS(summarize(EventDataset({}, 2)), Error);

    const auto j = to_json(summarize(step));
    for (const auto *key : {"n_events", "label_rate", "mean_step_change", "per_feature"}) {
        CHECK(j.contains(key));
    }
}

TEST_CASE("summarize: feature permutation invariance") {
    const auto d = random_dataset(11, 200, 5);
    std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    std::vector<TradeEvent> ev = d.events();
    for (auto &e : ev) {
        std::vector<double> f(5);
        for (std::size_t j = 0; j < 5; ++j) {
            f[j] = e.features[perm[j]];
        }
        e.features = f;
    }
    const auto a = summarize(d), b = summarize(with_events(d, ev));
    CHECK(a.label_rate == b.label_rate);
    CHECK(a.mean_step_change == doctest::Approx(b.mean_step_change).epsilon(1e-14));
    for (std::size_t j = 0; j < 5; ++j) {
        CHECK(b.per_feature[j].mean == a.per_feature[perm[j]].mean);
    }
}
