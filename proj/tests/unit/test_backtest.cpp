// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "support.hpp"

#include "qfill/backtest/backtest.hpp"
#include "qfill/common/error.hpp"
#include "qfill/common/rng.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

using namespace qfill;
using namespace qfill::backtest;
using learners::Family;

namespace {

/// Hourly events over `n` hours; label follows x0 plus noise so every family
/// can beat chance. Every fifth event is unlabeled.
EventDataset hourly_dataset(std::uint64_t seed, std::size_t n, std::size_t p) {
    Rng rng(seed);
    std::vector<TradeEvent> ev;
    const Timestamp t0 = 1'700'006'400'000'000LL;
    for (std::size_t i = 0; i < n; ++i) {
        TradeEvent e;
        e.timestamp = t0 + static_cast<Timestamp>(i) * kMicrosPerHour +
                      static_cast<Timestamp>(rng.below(1000));
        e.event_id = 100 + i;
        for (std::size_t j = 0; j < p; ++j) {
            e.features.push_back(2.0 * rng.uniform() - 1.0);
        }
        if (i % 5 != 4) {
            e.label = e.features[0] + 0.6 * rng.normal() > 0.0 ? 1 : 0;
        }
        ev.push_back(std::move(e));
    }
    return EventDataset(std::move(ev), p);
}

/// Same metadata, different features.
EventDataset reshuffled(const EventDataset &d, std::uint64_t seed) {
    Rng rng(seed);
    auto ev = d.events();
    for (auto &e : ev) {
        for (auto &x : e.features) {
            x = 0.5 * x + 0.5 * (2.0 * rng.uniform() - 1.0);
        }
    }
    return EventDataset(std::move(ev), d.feature_count());
}

BacktestConfig small_config() {
    BacktestConfig c;
    c.training_sizes = {60};
    c.buckets = 3;
    c.folds = 3;
    c.master_seed = 11;
    return c;
}

std::string slurp(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_of(const std::string &s, const std::string &needle) {
    std::size_t n = 0;
    for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) {
        ++n;
    }
    return n;
}

} // namespace

TEST_CASE("bucketize") {
    CHECK(bucketize(1) == 0);
    CHECK(bucketize(kMicrosPerDay - 1) == 0);
    CHECK(bucketize(kMicrosPerDay) == 1);
    CHECK(bucketize(3 * kMicrosPerDay + 1) == 3);
    for (Timestamp bad : {Timestamp{0}, Timestamp{-5}}) {
        try {
            (void)bucketize(bad);
            FAIL("expected NonPositiveDelta");
        } catch (const Error &e) {
            CHECK(e.kind() == ErrorKind::NonPositiveDelta);
        }
    }
}

TEST_CASE("origins and windows") {
    const auto d = hourly_dataset(1, 24 * 6, 3);
    const auto per_day = origins(d, {StrideMode::PerDay, 1});
    CHECK(per_day.size() >= 6);
    CHECK(per_day.front() == d[0].timestamp);
    std::set<Timestamp> days;
    for (auto o : per_day) {
        CHECK(days.insert(o / kMicrosPerDay).second);
    }
    const auto nth = origins(d, {StrideMode::EveryNth, 10});
    CHECK(nth.size() == (d.size() + 9) / 10);
    CHECK(nth[1] == d[10].timestamp);

    // Brute-force window: last `size` labeled events strictly before origin.
    for (std::size_t k : {30u, 77u, 143u}) {
        const Timestamp origin = d[k].timestamp;
        for (std::size_t size : {1u, 10u, 25u}) {
            std::vector<std::size_t> expect;
            for (std::size_t i = 0; i < d.size(); ++i) {
                if (d[i].timestamp < origin && d[i].label) {
                    expect.push_back(i);
                }
            }
            const auto w = select_window(d, origin, size);
            if (expect.size() < size) {
                CHECK_FALSE(w.has_value());
                continue;
            }
            expect.erase(expect.begin(), expect.end() - static_cast<std::ptrdiff_t>(size));
            REQUIRE(w.has_value());
            CHECK(w->indices == expect);
            CHECK(w->end < origin);
            CHECK(w->start == d[expect.front()].timestamp);
        }
    }
    CHECK_FALSE(select_window(d, d[0].timestamp, 1).has_value());
}

TEST_CASE("fit seeds") {
    const auto a = fit_seed(3, 1000, Family::RF, 500);
    CHECK(a == fit_seed(3, 1000, Family::RF, 500));
    CHECK(a != fit_seed(4, 1000, Family::RF, 500));
    CHECK(a != fit_seed(3, 1001, Family::RF, 500));
    CHECK(a != fit_seed(3, 1000, Family::GBT, 500));
    CHECK(a != fit_seed(3, 1000, Family::RF, 1000));
}

TEST_CASE("no leakage past the training window") {
    const auto d = hourly_dataset(2, 24 * 5, 4);
    const auto cfg = small_config();
    const Timestamp origin = d[100].timestamp;
    const auto w = select_window(d, origin, 60);
    REQUIRE(w.has_value());

    // Scramble every event after the window: features and labels.
    Rng rng(99);
    auto ev = d.events();
    for (auto &e : ev) {
        if (e.timestamp > w->end) {
            for (auto &x : e.features) {
                x = 10.0 * rng.normal();
            }
            if (e.label) {
                e.label = 1 - *e.label;
            }
        }
    }
    const EventDataset mutated(std::move(ev), d.feature_count());
    const auto w2 = select_window(mutated, origin, 60);
    REQUIRE(w2.has_value());
    CHECK(w2->indices == w->indices);

    for (auto f : cfg.families) {
        CAPTURE(learners::to_string(f));
        const auto m1 = fit_window(d, *w, f, 60, origin, cfg);
        const auto m2 = fit_window(mutated, *w2, f, 60, origin, cfg);
        CHECK(learners::checksum(m1) == learners::checksum(m2));
        for (std::size_t k = 100; k < 110; ++k) {
            CHECK(learners::predict_one(m1, d[k].features) ==
                  learners::predict_one(m2, d[k].features));
        }
    }
}

TEST_CASE("run_protocol schedule") {
    const auto d = hourly_dataset(3, 24 * 5, 3);
    auto cfg = small_config();
    cfg.families = {Family::LR, Family::GBT};
    const std::vector<Source> sources{{"classical", d}, {"quantum", reshuffled(d, 5)}};
    const auto res = run_protocol(cfg, sources);
    REQUIRE_FALSE(res.records.empty());
    CHECK(res.sources == std::vector<std::string>{"classical", "quantum"});

    using Key = std::tuple<int, std::size_t, Timestamp, EventId, Timestamp, Timestamp, std::size_t>;
    std::map<std::string, std::vector<Key>> schedule;
    std::map<std::size_t, std::size_t> per_bucket;
    for (const auto &r : res.records) {
        CHECK(r.train_end < r.origin);
        CHECK(r.train_end < r.timestamp);
        CHECK(r.origin <= r.timestamp);
        CHECK(r.delta_us == r.timestamp - r.train_end);
        CHECK(r.bucket == bucketize(r.delta_us));
        CHECK(r.bucket < cfg.buckets);
        CHECK(r.probability >= 0.0);
        CHECK(r.probability <= 1.0);
        schedule[r.source].emplace_back(static_cast<int>(r.family), r.training_size, r.origin,
                                        r.event_id, r.train_start, r.train_end, r.bucket);
        ++per_bucket[r.bucket];
    }
    // Identical evaluation schedule for both sources.
    CHECK(schedule["classical"] == schedule["quantum"]);
    std::size_t total = 0;
    for (const auto &[b, n] : per_bucket) {
        total += n;
    }
    CHECK(total == res.records.size());

    for (const auto &row : res.summary) {
        if (!row.family && row.training_size == 0) {
            std::size_t n = 0;
            for (const auto &r : res.records) {
                n += r.source == row.source && r.bucket == row.bucket;
            }
            CHECK(row.n_records == n);
        }
    }

    // A source identical in features but renamed reproduces every probability.
    const std::vector<Source> twins{{"a", d}, {"b", d}};
    const auto tw = run_protocol(cfg, twins);
    std::vector<double> pa, pb;
    for (const auto &r : tw.records) {
        (r.source == "a" ? pa : pb).push_back(r.probability);
    }
    CHECK(pa == pb);

    // Determinism.
    CHECK(records_csv(run_protocol(cfg, sources)) == records_csv(res));
}

TEST_CASE("run_protocol errors") {
    const auto d = hourly_dataset(4, 24 * 3, 3);
    auto cfg = small_config();
    cfg.families = {Family::LR};

    cfg.training_sizes = {10'000};
    try {
        (void)run_protocol(cfg, {{"classical", d}});
        FAIL("expected InsufficientHistory");
    } catch (const Error &e) {
        CHECK(e.kind() == ErrorKind::InsufficientHistory);
    }

    cfg.training_sizes = {20};
    auto ev = d.events();
    ev.pop_back();
    const EventDataset shorter(std::move(ev), 3);
    try {
        (void)run_protocol(cfg, {{"classical", d}, {"quantum", shorter}});
        FAIL("expected DimensionMismatch");
    } catch (const Error &e) {
        CHECK(e.kind() == ErrorKind::DimensionMismatch);
    }

    CHECK_THROWS_AS((void)run_protocol(cfg, {}), Error);
    CHECK_THROWS_AS((void)run_protocol(cfg, {{"x", d}, {"x", d}}), Error);
    cfg.buckets = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("single-class windows are skipped") {
    auto ev = hourly_dataset(5, 24 * 4, 3).events();
    // The first 40 labeled events are all negative.
    std::size_t seen = 0;
    for (auto &e : ev) {
        if (e.label && seen++ < 40) {
            e.label = 0;
        }
    }
    const EventDataset d(std::move(ev), 3);
    auto cfg = small_config();
    cfg.training_sizes = {20};
    cfg.families = {Family::LR};
    cfg.stride = {StrideMode::EveryNth, 6};
    const auto res = run_protocol(cfg, {{"classical", d}});
    CHECK_FALSE(res.skipped.empty());
    CHECK(res.skipped.front().find("SingleClassWindow") != std::string::npos);
    CHECK_FALSE(res.records.empty());
}

TEST_CASE("comparison table") {
    BacktestResult res;
    res.sources = {"classical", "quantum"};
    res.families = {Family::LR, Family::GBT, Family::RF, Family::MLP};
    res.buckets = 2;
    for (const auto &src : res.sources) {
        const double shift = src == "quantum" ? 0.10 : 0.0;
        for (int f = -1; f < 4; ++f) {
            for (std::size_t b = 0; b < res.buckets; ++b) {
                SummaryRow r;
                r.source = src;
                if (f >= 0) {
                    r.family = static_cast<Family>(f);
                }
                r.bucket = b;
                r.n_origins = 3;
                r.median_auc = 0.62 - 0.03 * static_cast<double>(b) + 0.01 * f + shift;
                r.mean_auc = r.median_auc;
                r.std_auc = 0.02;
                res.summary.push_back(r);
            }
        }
    }

    const auto t = compare_sources(res, "classical");
    CHECK(t.rows == std::vector<std::string>{"All", "LR", "XGB", "RF", "NN"});
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        for (std::size_t b = 0; b < t.buckets; ++b) {
            CHECK(t.cells[0][r][b].diff_pp == 0);
            CHECK(t.cells[1][r][b].diff_pp == 10);
        }
    }
    const auto self = compare_sources(res, "quantum");
    CHECK(self.cells[1][2][1].diff_pp == 0);
    CHECK(self.cells[0][2][1].diff_pp == -10);

    const auto text = render_table(t);
    std::istringstream in(text);
    std::string header, line;
    std::getline(in, header);
    CHECK(header.rfind("Model", 0) == 0);
    CHECK(header.find("classical 0d") != std::string::npos);
    CHECK(header.find("quantum 1d") != std::string::npos);
    CHECK(count_of(header, "Diff. to classical") == 1);
    std::vector<std::string> labels;
    while (std::getline(in, line)) {
        labels.push_back(line.substr(0, line.find('\t')));
        CHECK(line.find("+10 / +10") != std::string::npos);
    }
    CHECK(labels == t.rows);

    try {
        (void)compare_sources(res, "missing");
        FAIL("expected MissingBaseline");
    } catch (const Error &e) {
        CHECK(e.kind() == ErrorKind::MissingBaseline);
    }
}

TEST_CASE("format_diff") {
    CHECK(format_diff(12) == "+12");
    CHECK(format_diff(-2) == "−2");
    CHECK(format_diff(0) == "±0");
}

TEST_CASE("compare on real records") {
    const auto d = hourly_dataset(6, 24 * 5, 3);
    auto cfg = small_config();
    cfg.families = {Family::LR};
    const auto res = run_protocol(cfg, {{"classical", d}, {"copy", d}});
    const auto t = compare_sources(res, "classical");
    for (const auto &row : t.cells[1]) {
        for (const auto &c : row) {
            CHECK(c.diff_pp == 0);
        }
    }
}

TEST_CASE("records csv round trip") {
    const auto d = hourly_dataset(7, 24 * 5, 3);
    auto cfg = small_config();
    cfg.families = {Family::GBT, Family::LR};
    const auto res = run_protocol(cfg, {{"classical", d}, {"q", reshuffled(d, 8)}});
    const auto csv = records_csv(res);
    const auto back = parse_records_csv(csv, res.buckets);
    CHECK(back.sources == res.sources);
    CHECK(back.families == res.families);
    REQUIRE(back.records.size() == res.records.size());
    for (std::size_t i = 0; i < res.records.size(); ++i) {
        CHECK(back.records[i].probability == res.records[i].probability);
        CHECK(back.records[i].event_id == res.records[i].event_id);
        CHECK(back.records[i].delta_us == res.records[i].delta_us);
    }
    CHECK(records_csv(back) == csv);
    CHECK(back.summary.size() == res.summary.size());
    CHECK_THROWS_AS((void)parse_records_csv("nope\n", 3), Error);
}

TEST_CASE("emit_report") {
    SUBCASE("empty result") {
        testing::TempDir dir;
        BacktestResult empty;
        empty.sources = {"classical"};
        empty.families = {Family::LR};
        empty.buckets = 2;
        emit_report(empty, {}, dir.path());
        const auto csv = slurp(dir / "records.csv");
        CHECK(count_of(csv, "\n") == 1);
        CHECK(csv.rfind("source,model,", 0) == 0);
        const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
        CHECK(summary.at("summary").empty());
        CHECK(summary.at("models") == nlohmann::json::array({"LR"}));
    }
    SUBCASE("bytes and plot lines") {
        const auto d = hourly_dataset(9, 24 * 5, 3);
        auto cfg = small_config();
        cfg.families = {Family::LR, Family::RF};
        const std::vector<Source> sources{{"classical", d}, {"quantum", reshuffled(d, 2)}};
        const auto res = run_protocol(cfg, sources);
        testing::TempDir a, b;
        emit_report(res, sources, a.path());
        emit_report(run_protocol(cfg, sources), sources, b.path());
        for (const char *name : {"records.csv", "summary.json", "decay.svg", "feature_hist.svg"}) {
            CAPTURE(name);
            CHECK(slurp(a / name) == slurp(b / name));
        }
        const auto svg = slurp(a / "decay.svg");
        CHECK(count_of(svg, "class=\"decay-line\"") == sources.size() * cfg.families.size());
        CHECK(count_of(svg, "class=\"band\"") == sources.size() * cfg.families.size());
        CHECK(count_of(slurp(a / "feature_hist.svg"), "class=\"panel\"") == sources.size());
    }
}

TEST_CASE("config json") {
    BacktestConfig c;
    c.training_sizes = {100, 200};
    c.buckets = 4;
    c.families = {Family::RF};
    c.stride = {StrideMode::EveryNth, 7};
    c.master_seed = 42;
    const auto back = config_from_json(to_json(c), 5);
    CHECK(back.training_sizes == c.training_sizes);
    CHECK(back.buckets == 4);
    CHECK(back.families == c.families);
    CHECK(back.stride.mode == StrideMode::EveryNth);
    CHECK(back.stride.n == 7);
    CHECK(back.master_seed == 42);

    const auto ref = config_from_json({{"grids", "reference"}}, 218);
    CHECK(ref.grid_for(Family::LR, 218).size() == 11);
    CHECK(ref.grid_for(Family::MLP, 218).size() == 36);
    const auto compact = config_from_json(nlohmann::json::object(), 10);
    CHECK(compact.grid_for(Family::GBT, 10).size() == 1);
    try {
        (void)config_from_json({{"buckets", "many"}}, 3);
        FAIL("expected ConfigParse");
    } catch (const Error &e) {
        CHECK(e.kind() == ErrorKind::ConfigParse);
    }
}
