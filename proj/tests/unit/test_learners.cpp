// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "support.hpp"

#include "qfill/common/digest.hpp"
#include "qfill/common/error.hpp"
#include "qfill/learners/auc.hpp"
#include "qfill/learners/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace qfill;
using namespace qfill::learners;

namespace {

double pairwise_auc(std::span<const double> s, std::span<const int> y) {
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

/// Labels from a noisy linear rule on p uniform features.
LabeledData linear_task(std::uint64_t seed, std::size_t n, std::size_t p, double noise = 0.3) {
    Rng rng(seed);
    LabeledData d{Matrix(n, p), std::vector<int>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            d.x(i, j) = 2.0 * rng.uniform() - 1.0;
            s += (j % 2 == 0 ? 1.0 : -0.5) * d.x(i, j);
        }
        d.y[i] = s + noise * rng.normal() > 0.0 ? 1 : 0;
    }
    return d;
}

std::vector<ModelSpec> small_specs() {
    GbtParams g;
    g.n_estimators = 20;
    RfParams r;
    r.n_estimators = 15;
    MlpParams m;
    m.hidden = {8};
    m.max_iter = 30;
    return {{LrParams{}, 7}, {g, 7}, {r, 7}, {m, 7}};
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

} // namespace

TEST_CASE("auc examples") {
    CHECK(auc(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}) == 1.0);
    CHECK(auc(std::vector<double>{0.4, 0.4, 0.4}, std::vector<int>{1, 0, 1}) == 0.5);
    CHECK(auc(std::vector<double>{0.8, 0.7, 0.3, 0.2}, std::vector<int>{1, 0, 1, 0}) == 0.75);
    try {
        (void)auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1});
        FAIL("expected SingleClassEval");
    } catch (const Error &e) {
        CHECK(e.kind() == ErrorKind::SingleClassEval);
    }
    CHECK_FALSE(try_auc(std::vector<double>{0.1}, std::vector<int>{0}).has_value());
}

TEST_CASE("auc equals the pairwise oracle and has the rank properties") {
    Rng rng(1);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng.below(49);
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng.below(8)) / 8.0;  // plenty of ties
            y[i] = static_cast<int>(rng.below(2));
        }
        y[0] = 1;
        y[1] = 0;
        const double a = auc(s, y);
        CHECK(a == pairwise_auc(s, y));

        std::vector<double> t(n), cont(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = std::exp(3.0 * s[i]) - 7.0;
            cont[i] = rng.normal();
        }
        CHECK(auc(t, y) == a);
        std::vector<double> cneg(n);
        for (std::size_t i = 0; i < n; ++i) {
            cneg[i] = -cont[i];
        }
        CHECK(auc(cont, y) + auc(cneg, y) == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("logistic objective gradient matches finite differences") {
    const auto d = linear_task(2, 80, 5);
    Rng rng(3);
    for (int k = 0; k < 20; ++k) {
        std::vector<double> theta(6);
        for (auto &t : theta) {
            t = rng.normal();
        }
        const double C = std::pow(10.0, 4.0 * rng.uniform() - 2.0);
        const auto [f, g] = logistic_objective(theta, d.x, d.y, C);
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < theta.size(); ++j) {
            const double h = 1e-5 * std::max(1.0, std::abs(theta[j]));
            auto up = theta, dn = theta;
            up[j] += h;
            dn[j] -= h;
            const double fd = (logistic_objective(up, d.x, d.y, C).first -
                               logistic_objective(dn, d.x, d.y, C).first) /
                              (2.0 * h);
            num += (g[j] - fd) * (g[j] - fd);
            den += g[j] * g[j];
        }
        CHECK(std::sqrt(num / den) <= 1e-5);
        CHECK(std::isfinite(f));
    }
}

TEST_CASE("logistic regression") {
    SUBCASE("separable data is ranked perfectly") {
        LabeledData d{Matrix(40, 1), std::vector<int>(40)};
        for (std::size_t i = 0; i < 40; ++i) {
            d.x(i, 0) = static_cast<double>(i) - 19.5;
            d.y[i] = i >= 20 ? 1 : 0;
        }
        const auto m = train({LrParams{1e4, 10000}, 0}, d.x, d.y);
        CHECK(auc(predict_proba(m, d.x), d.y) == 1.0);
    }
    SUBCASE("zero weights predict one half") {
        TrainedModel m;
        m.spec = {LrParams{}, 0};
        m.n_features = 3;
        m.params = LogisticModel{{0.0, 0.0, 0.0}, 0.0, 0};
        Matrix x(4, 3);
        x(2, 1) = 5.0;
        for (double p : predict_proba(m, x)) {
            CHECK(p == 0.5);
        }
    }
    SUBCASE("converged gradient is small") {
        const auto d = linear_task(4, 200, 4);
        const auto m = train({LrParams{1.0, 10000}, 0}, d.x, d.y);
        const auto &lm = std::get<LogisticModel>(m.params);
        std::vector<double> theta = lm.weights;
        theta.push_back(lm.intercept);
        const auto g = logistic_objective(theta, d.x, d.y, 1.0).second;
        for (double v : g) {
            CHECK(std::abs(v) <= 1e-6);
        }
    }
}

TEST_CASE("gradient boosting with one full-rate stage is its tree") {
    const auto d = linear_task(5, 150, 3);
    GbtParams p;
    p.n_estimators = 1;
    p.learning_rate = 1.0;
    p.max_depth = 2;
    const auto m = train({p, 0}, d.x, d.y);
    const auto &g = std::get<GbtModel>(m.params);
    REQUIRE(g.trees.size() == 1);
    const double prior = std::count(d.y.begin(), d.y.end(), 1) / 150.0;
    CHECK(g.base_score == doctest::Approx(std::log(prior / (1.0 - prior))).epsilon(1e-14));
    for (std::size_t i = 0; i < 150; ++i) {
        CHECK(predict_one(m, d.x.row(i)) ==
              doctest::Approx(sigmoid(g.base_score + g.trees[0].predict(d.x.row(i)))).epsilon(1e-15));
    }
    // A depth-2 tree has at most four distinct outputs.
    auto pr = predict_proba(m, d.x);
    std::sort(pr.begin(), pr.end());
    CHECK(std::unique(pr.begin(), pr.end()) - pr.begin() <= 4);
}

TEST_CASE("random forest") {
    SUBCASE("single-class training predicts that class") {
        const auto d = linear_task(6, 30, 2);
        std::vector<int> ones(30, 1);
        const auto m = train({RfParams{}, 3}, d.x, ones);
        for (double p : predict_proba(m, d.x)) {
            CHECK(p == 1.0);
        }
    }
    SUBCASE("criteria all learn a clean rule") {
        const auto d = linear_task(7, 300, 4, 0.05);
        for (auto c : {Criterion::Gini, Criterion::Entropy, Criterion::LogLoss}) {
            RfParams p;
            p.criterion = c;
            p.n_estimators = 30;
            const auto m = train({p, 1}, d.x, d.y);
            CHECK(auc(predict_proba(m, d.x), d.y) > 0.95);
        }
    }
}

TEST_CASE("mlp learns a linear rule") {
    const auto d = linear_task(8, 400, 3, 0.05);
    for (auto a : {Activation::Relu, Activation::Logistic, Activation::Tanh}) {
        for (auto s : {Schedule::Constant, Schedule::InvScaling, Schedule::Adaptive}) {
            MlpParams p;
            p.hidden = {6};
            p.activation = a;
            p.schedule = s;
            const auto m = train({p, 2}, d.x, d.y);
            const auto pr = predict_proba(m, d.x);
            for (double v : pr) {
                CHECK((v >= 0.0 && v <= 1.0));
            }
            CHECK(auc(pr, d.y) > 0.9);
        }
    }
    CHECK(mlp_hidden_sizes(218, 4) == std::vector<std::size_t>{262, 196, 131, 65});
    CHECK(mlp_hidden_sizes(218, 2) == std::vector<std::size_t>{262, 196});
    CHECK(mlp_hidden_sizes(1, 4).back() == 1);
}

TEST_CASE("training is deterministic") {
    const auto d = linear_task(9, 120, 4);
    for (const auto &spec : small_specs()) {
        CAPTURE(to_string(spec.family()));
        const auto a = train(spec, d.x, d.y), b = train(spec, d.x, d.y);
        CHECK(checksum(a) == checksum(b));
        CHECK(predict_proba(a, d.x) == predict_proba(b, d.x));
    }
}

TEST_CASE("trees are invariant to positive feature scaling") {
    const auto d = linear_task(10, 200, 3);
    Matrix scaled = d.x;
    for (auto &v : scaled.data) {
        v *= 3.7;
    }
    for (const auto &spec : small_specs()) {
        if (spec.family() != Family::GBT && spec.family() != Family::RF) {
            continue;
        }
        const auto a = predict_proba(train(spec, d.x, d.y), d.x);
        const auto b = predict_proba(train(spec, scaled, d.y), scaled);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(std::abs(a[i] - b[i]) <= 1e-12);
        }
    }
}

TEST_CASE("training input errors") {
    const auto d = linear_task(11, 20, 2);
    std::vector<int> zeros(20, 0);
    try {
        (void)train({LrParams{}, 0}, d.x, zeros);
        FAIL("expected SingleClassTraining");
    } catch (const Error &e) {
        CHECK(e.kind() == ErrorKind::SingleClassTraining);
    }
    Matrix bad = d.x;
    bad(3, 1) = std::nan("");
    try {
        (void)train({GbtParams{}, 0}, bad, d.y);
        FAIL("expected NonFiniteFeature");
    } catch (const Error &e) {
        CHECK(e.kind() == ErrorKind::NonFiniteFeature);
    }
    const auto m = train({LrParams{}, 0}, d.x, d.y);
    CHECK_THROWS_AS(predict_proba(m, Matrix(2, 5)), Error);
}

TEST_CASE("model and hyperparameter json round trips") {
    const auto d = linear_task(12, 100, 3);
    for (const auto &spec : small_specs()) {
        const auto m = train(spec, d.x, d.y);
        const auto back = model_from_json(to_json(m));
        CHECK(checksum(back) == checksum(m));
        CHECK(predict_proba(back, d.x) == predict_proba(m, d.x));
        CHECK(to_json(hyperparams_from_json(to_json(spec.params))) == to_json(spec.params));
    }
    CHECK_THROWS_AS(hyperparams_from_json({{"C", 1.0}}), Error);
    CHECK(family_from_string("XGB") == Family::GBT);
    CHECK(family_from_string("mlp") == Family::MLP);
    CHECK(display_name(Family::MLP) == "NN");
    CHECK_THROWS_AS(family_from_string("svm"), Error);
}

TEST_CASE("grid search") {
    const auto d = linear_task(13, 160, 3);
    const CvConfig cv{4, 21, true};

    SUBCASE("one cell equals a direct fit") {
        const auto m = grid_search_cv({GbtParams{}}, d.x, d.y, cv);
        const auto direct = train({GbtParams{}, cv.seed}, d.x, d.y);
        CHECK(predict_proba(m, d.x) == predict_proba(direct, d.x));
        CHECK(std::isnan(m.validation_auc));
    }
    SUBCASE("duplicate cells tie and the first wins") {
        RfParams r;
        r.n_estimators = 10;
        CvConfig full = cv;
        full.skip_single_cell = false;
        const auto single = grid_search_cv({r}, d.x, d.y, full);
        const auto dup = grid_search_cv({r, r, r}, d.x, d.y, full);
        CHECK(dup.grid_cell == 0);
        CHECK(dup.validation_auc == single.validation_auc);
        CHECK(predict_proba(dup, d.x) == predict_proba(single, d.x));
    }
    SUBCASE("weak regularization wins when only a small-scale feature separates") {
        // x0 separates perfectly at a tiny scale; x1 is a noisy large-scale
        // feature whose class means differ. Heavy shrinkage follows x1.
        Rng rng(14);
        LabeledData s{Matrix(200, 2), std::vector<int>(200)};
        for (std::size_t i = 0; i < 200; ++i) {
            const int y = static_cast<int>(i % 2);
            s.y[i] = y;
            s.x(i, 0) = (y ? 0.01 : -0.01) + 0.009 * (2.0 * rng.uniform() - 1.0);
            s.x(i, 1) = (y ? 0.5 : -0.5) + 2.0 * rng.normal();
        }
        CvConfig full = cv;
        full.skip_single_cell = false;
        const auto m = grid_search_cv({LrParams{1e-4, 10000}, LrParams{1e4, 10000}}, s.x, s.y, full);
        CHECK(m.grid_cell == 1);
        CHECK(std::get<LrParams>(m.spec.params).C == 1e4);
    }
    SUBCASE("empty grid") {
        CHECK_THROWS_AS(grid_search_cv({}, d.x, d.y, cv), Error);
    }
}

TEST_CASE("reference grids") {
    CHECK(reference_grid(Family::LR, 10).size() == 11);
    CHECK(reference_grid(Family::GBT, 10).size() == 120);
    CHECK(reference_grid(Family::RF, 10).size() == 18);
    CHECK(reference_grid(Family::MLP, 10).size() == 36);
    CHECK(std::get<LrParams>(reference_grid(Family::LR, 10).front()).C == doctest::Approx(1e-4));
    CHECK(std::get<LrParams>(reference_grid(Family::LR, 10).back()).C == doctest::Approx(1e4));
}

TEST_CASE("golden predictions") {
    const auto path = std::filesystem::path(QFILL_TEST_DATA) / "golden_predictions.json";
    const auto d = linear_task(15, 150, 4);
    const auto probe = linear_task(16, 25, 4);
    nlohmann::json current = nlohmann::json::object();
    for (const auto &spec : small_specs()) {
        current[std::string(to_string(spec.family()))] =
            predict_proba(train(spec, d.x, d.y), probe.x);
    }
    if (std::getenv("QFILL_REGEN_GOLDEN") != nullptr) {
        write_file(path, current.dump(1) + "\n");
    }
    REQUIRE(std::filesystem::exists(path));
    const auto golden = nlohmann::json::parse(read_file(path));
    for (const auto &[family, values] : current.items()) {
        CAPTURE(family);
        const auto expected = golden.at(family).get<std::vector<double>>();
        const auto got = values.get<std::vector<double>>();
        REQUIRE(got.size() == expected.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(std::abs(got[i] - expected[i]) <= 1e-12);
        }
    }
}
