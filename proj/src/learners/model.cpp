// SPDX-License-Identifier: Apache-2.0
#include "qfill/learners/model.hpp"

#include "qfill/common/digest.hpp"
#include "qfill/common/error.hpp"
#include "qfill/common/parallel.hpp"
#include "qfill/common/rng.hpp"
#include "qfill/learners/auc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qfill::learners {

using nlohmann::json;

Matrix take_rows(const Matrix &x, std::span<const std::size_t> idx) {
    Matrix out(idx.size(), x.cols);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const auto src = x.row(idx[k]);
        std::copy(src.begin(), src.end(), out.row(k).begin());
    }
    return out;
}

LabeledData labeled_data(std::span<const TradeEvent> events, std::size_t feature_count) {
    LabeledData d;
    std::size_t n = 0;
    for (const auto &e : events) {
        n += e.label.has_value();
    }
    d.x = Matrix(n, feature_count);
    d.y.reserve(n);
    std::size_t r = 0;
    for (const auto &e : events) {
        if (!e.label) {
            continue;
        }
        std::copy(e.features.begin(), e.features.end(), d.x.row(r++).begin());
        d.y.push_back(*e.label);
    }
    return d;
}

LabeledData labeled_data(const EventDataset &dataset) {
    return labeled_data(dataset.events(), dataset.feature_count());
}

std::string_view to_string(Family f) noexcept {
    switch (f) {
    case Family::LR: return "lr";
    case Family::GBT: return "gbt";
    case Family::RF: return "rf";
    case Family::MLP: return "mlp";
    }
    return "lr";
}

std::string_view display_name(Family f) noexcept {
    switch (f) {
    case Family::LR: return "LR";
    case Family::GBT: return "XGB";
    case Family::RF: return "RF";
    case Family::MLP: return "NN";
    }
    return "LR";
}

Family family_from_string(std::string_view s) {
    for (Family f : {Family::LR, Family::GBT, Family::RF, Family::MLP}) {
        if (s == to_string(f) || s == display_name(f)) {
            return f;
        }
    }
    throw Error(ErrorKind::InvalidArgument, "unknown model family '" + std::string(s) + "'");
}

Family family_of(const Hyperparams &h) noexcept { return static_cast<Family>(h.index()); }

// ------------------------------------------------------------- train/predict

TrainedModel train(const ModelSpec &spec, const Matrix &x, std::span<const int> y) {
    if (y.size() != x.rows) {
        throw Error(ErrorKind::DimensionMismatch, "X and y differ in length");
    }
    for (double v : x.data) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::NonFiniteFeature, "training features must be finite");
        }
    }
    std::size_t pos = 0;
    for (int v : y) {
        if (v != 0 && v != 1) {
            throw Error(ErrorKind::InvalidArgument, "labels must be 0 or 1");
        }
        pos += static_cast<std::size_t>(v);
    }
    const bool single_class = pos == 0 || pos == y.size();
    if (x.rows == 0 || (single_class && spec.family() != Family::RF)) {
        throw Error(ErrorKind::SingleClassTraining,
                    "training data holds a single class (" + std::to_string(pos) + " of " +
                        std::to_string(y.size()) + " positive)");
    }
    TrainedModel m;
    m.spec = spec;
    m.n_features = x.cols;
    std::visit(
        [&](const auto &hp) {
            using T = std::decay_t<decltype(hp)>;
            if constexpr (std::is_same_v<T, LrParams>) {
                m.params = train_logistic(hp, x, y);
            } else if constexpr (std::is_same_v<T, GbtParams>) {
                m.params = train_gbt(hp, x, y);
            } else if constexpr (std::is_same_v<T, RfParams>) {
                m.params = train_rf(hp, x, y, spec.seed);
            } else {
                m.params = train_mlp(hp, x, y, spec.seed);
            }
        },
        spec.params);
    return m;
}

double predict_one(const TrainedModel &model, std::span<const double> x) {
    if (x.size() != model.n_features) {
        throw Error(ErrorKind::DimensionMismatch,
                    "model expects " + std::to_string(model.n_features) + " features, got " +
                        std::to_string(x.size()));
    }
    const double p = std::visit(
        [&](const auto &m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LogisticModel>) {
                return predict_logistic(m, x);
            } else if constexpr (std::is_same_v<T, GbtModel>) {
                return predict_gbt(m, x);
            } else if constexpr (std::is_same_v<T, RfModel>) {
                return predict_rf(m, x);
            } else {
                return predict_mlp(m, x);
            }
        },
        model.params);
    return std::clamp(p, 0.0, 1.0);
}

std::vector<double> predict_proba(const TrainedModel &model, const Matrix &x) {
    if (x.cols != model.n_features) {
        throw Error(ErrorKind::DimensionMismatch,
                    "model expects " + std::to_string(model.n_features) + " features, got " +
                        std::to_string(x.cols));
    }
    std::vector<double> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        out[i] = predict_one(model, x.row(i));
    }
    return out;
}

// ----------------------------------------------------------- serialization

namespace {

std::string_view to_string(Criterion c) {
    switch (c) {
    case Criterion::Gini: return "gini";
    case Criterion::Entropy: return "entropy";
    case Criterion::LogLoss: return "log_loss";
    }
    return "gini";
}

std::string_view to_string(Activation a) {
    switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Logistic: return "logistic";
    case Activation::Tanh: return "tanh";
    }
    return "relu";
}

std::string_view to_string(Schedule s) {
    switch (s) {
    case Schedule::Constant: return "constant";
    case Schedule::InvScaling: return "invscaling";
    case Schedule::Adaptive: return "adaptive";
    }
    return "constant";
}

template <class E, std::size_t N>
E enum_from(const std::string &s, const E (&values)[N], const char *what) {
    for (E v : values) {
        if (to_string(v) == s) {
            return v;
        }
    }
    throw Error(ErrorKind::ConfigParse, std::string("unknown ") + what + " '" + s + "'");
}

json tree_json(const Tree &t) {
    json f = json::array(), th = json::array(), l = json::array(), r = json::array(),
         v = json::array();
    for (const auto &n : t.nodes) {
        f.push_back(n.feature);
        th.push_back(n.threshold);
        l.push_back(n.left);
        r.push_back(n.right);
        v.push_back(n.value);
    }
    return {{"feature", f}, {"threshold", th}, {"left", l}, {"right", r}, {"value", v}};
}

Tree tree_from(const json &j) {
    const auto f = j.at("feature").get<std::vector<int>>();
    const auto th = j.at("threshold").get<std::vector<double>>();
    const auto l = j.at("left").get<std::vector<int>>();
    const auto r = j.at("right").get<std::vector<int>>();
    const auto v = j.at("value").get<std::vector<double>>();
    if (th.size() != f.size() || l.size() != f.size() || r.size() != f.size() ||
        v.size() != f.size() || f.empty()) {
        throw Error(ErrorKind::ConfigParse, "malformed tree");
    }
    Tree t;
    for (std::size_t k = 0; k < f.size(); ++k) {
        const auto nn = static_cast<int>(f.size());
        if (f[k] >= 0 && (l[k] <= static_cast<int>(k) || r[k] <= static_cast<int>(k) ||
                          l[k] >= nn || r[k] >= nn)) {
            throw Error(ErrorKind::ConfigParse, "malformed tree links");
        }
        t.nodes.push_back({f[k], th[k], l[k], r[k], v[k]});
    }
    return t;
}

json trees_json(const std::vector<Tree> &trees) {
    json a = json::array();
    for (const auto &t : trees) {
        a.push_back(tree_json(t));
    }
    return a;
}

std::vector<Tree> trees_from(const json &j) {
    std::vector<Tree> out;
    for (const auto &t : j) {
        out.push_back(tree_from(t));
    }
    return out;
}

} // namespace

json to_json(const Hyperparams &h) {
    return std::visit(
        [](const auto &hp) -> json {
            using T = std::decay_t<decltype(hp)>;
            if constexpr (std::is_same_v<T, LrParams>) {
                return {{"family", "lr"}, {"C", hp.C}, {"max_iter", hp.max_iter}};
            } else if constexpr (std::is_same_v<T, GbtParams>) {
                return {{"family", "gbt"},
                        {"max_depth", hp.max_depth},
                        {"n_estimators", hp.n_estimators},
                        {"learning_rate", hp.learning_rate},
                        {"lambda", hp.lambda},
                        {"min_child_weight", hp.min_child_weight},
                        {"max_bins", hp.max_bins}};
            } else if constexpr (std::is_same_v<T, RfParams>) {
                return {{"family", "rf"},
                        {"criterion", std::string(to_string(hp.criterion))},
                        {"n_estimators", hp.n_estimators},
                        {"max_depth", hp.max_depth},
                        {"max_bins", hp.max_bins}};
            } else {
                return {{"family", "mlp"},
                        {"hidden_layer_sizes", hp.hidden},
                        {"activation", std::string(to_string(hp.activation))},
                        {"learning_rate", std::string(to_string(hp.schedule))},
                        {"max_iter", hp.max_iter},
                        {"learning_rate_init", hp.learning_rate_init},
                        {"alpha", hp.alpha},
                        {"batch_size", hp.batch_size},
                        {"momentum", hp.momentum},
                        {"tol", hp.tol},
                        {"n_iter_no_change", hp.n_iter_no_change}};
            }
        },
        h);
}

Hyperparams hyperparams_from_json(const json &j) {
    try {
        Family f;
        try {
            f = family_from_string(j.at("family").get<std::string>());
        } catch (const Error &e) {
            throw Error(ErrorKind::ConfigParse, e.what());
        }
        switch (f) {
        case Family::LR: {
            LrParams p;
            p.C = j.value("C", p.C);
            p.max_iter = j.value("max_iter", p.max_iter);
            if (!(p.C > 0.0)) {
                throw Error(ErrorKind::ConfigParse, "C must be positive");
            }
            return p;
        }
        case Family::GBT: {
            GbtParams p;
            p.max_depth = j.value("max_depth", p.max_depth);
            p.n_estimators = j.value("n_estimators", p.n_estimators);
            p.learning_rate = j.value("learning_rate", p.learning_rate);
            p.lambda = j.value("lambda", p.lambda);
            p.min_child_weight = j.value("min_child_weight", p.min_child_weight);
            p.max_bins = j.value("max_bins", p.max_bins);
            return p;
        }
        case Family::RF: {
            static constexpr Criterion kAll[] = {Criterion::Gini, Criterion::Entropy,
                                                 Criterion::LogLoss};
            RfParams p;
            if (j.contains("criterion")) {
                p.criterion = enum_from(j.at("criterion").get<std::string>(), kAll, "criterion");
            }
            p.n_estimators = j.value("n_estimators", p.n_estimators);
            p.max_depth = j.value("max_depth", p.max_depth);
            p.max_bins = j.value("max_bins", p.max_bins);
            return p;
        }
        case Family::MLP: {
            static constexpr Activation kAct[] = {Activation::Relu, Activation::Logistic,
                                                  Activation::Tanh};
            static constexpr Schedule kSched[] = {Schedule::Constant, Schedule::InvScaling,
                                                  Schedule::Adaptive};
            MlpParams p;
            p.hidden = j.value("hidden_layer_sizes", p.hidden);
            if (j.contains("activation")) {
                p.activation = enum_from(j.at("activation").get<std::string>(), kAct, "activation");
            }
            if (j.contains("learning_rate")) {
                p.schedule =
                    enum_from(j.at("learning_rate").get<std::string>(), kSched, "schedule");
            }
            p.max_iter = j.value("max_iter", p.max_iter);
            p.learning_rate_init = j.value("learning_rate_init", p.learning_rate_init);
            p.alpha = j.value("alpha", p.alpha);
            p.batch_size = j.value("batch_size", p.batch_size);
            p.momentum = j.value("momentum", p.momentum);
            p.tol = j.value("tol", p.tol);
            p.n_iter_no_change = j.value("n_iter_no_change", p.n_iter_no_change);
            return p;
        }
        }
    } catch (const json::exception &e) {
        throw Error(ErrorKind::ConfigParse, std::string("model params: ") + e.what());
    }
    throw Error(ErrorKind::ConfigParse, "unreachable family");
}

json to_json(const TrainedModel &m) {
    json params = std::visit(
        [](const auto &p) -> json {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, LogisticModel>) {
                return {{"weights", p.weights},
                        {"intercept", p.intercept},
                        {"iterations", p.iterations}};
            } else if constexpr (std::is_same_v<T, GbtModel>) {
                return {{"base_score", p.base_score},
                        {"learning_rate", p.learning_rate},
                        {"trees", trees_json(p.trees)}};
            } else if constexpr (std::is_same_v<T, RfModel>) {
                return {{"trees", trees_json(p.trees)}};
            } else {
                json layers = json::array();
                for (const auto &L : p.layers) {
                    layers.push_back(
                        {{"in", L.in}, {"out", L.out}, {"weights", L.weights}, {"bias", L.bias}});
                }
                return {{"activation", std::string(to_string(p.activation))},
                        {"layers", layers},
                        {"epochs", p.epochs}};
            }
        },
        m.params);
    json j = {{"family", std::string(to_string(m.family()))},
              {"spec", to_json(m.spec.params)},
              {"seed", m.spec.seed},
              {"n_features", m.n_features},
              {"grid_cell", m.grid_cell},
              {"params", params}};
    j["validation_auc"] = std::isfinite(m.validation_auc) ? json(m.validation_auc) : json(nullptr);
    return j;
}

TrainedModel model_from_json(const json &j) {
    try {
        TrainedModel m;
        m.spec.params = hyperparams_from_json(j.at("spec"));
        m.spec.seed = j.at("seed").get<std::uint64_t>();
        m.n_features = j.at("n_features").get<std::size_t>();
        m.grid_cell = j.value("grid_cell", std::size_t{0});
        const auto &v = j.at("validation_auc");
        m.validation_auc = v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
        const auto &p = j.at("params");
        switch (m.family()) {
        case Family::LR: {
            LogisticModel lm;
            lm.weights = p.at("weights").get<std::vector<double>>();
            lm.intercept = p.at("intercept").get<double>();
            lm.iterations = p.value("iterations", std::size_t{0});
            if (lm.weights.size() != m.n_features) {
                throw Error(ErrorKind::ConfigParse, "weight count differs from n_features");
            }
            m.params = std::move(lm);
            break;
        }
        case Family::GBT: {
            GbtModel gm;
            gm.base_score = p.at("base_score").get<double>();
            gm.learning_rate = p.at("learning_rate").get<double>();
            gm.trees = trees_from(p.at("trees"));
            m.params = std::move(gm);
            break;
        }
        case Family::RF: {
            RfModel rm;
            rm.trees = trees_from(p.at("trees"));
            if (rm.trees.empty()) {
                throw Error(ErrorKind::ConfigParse, "forest has no trees");
            }
            m.params = std::move(rm);
            break;
        }
        case Family::MLP: {
            static constexpr Activation kAct[] = {Activation::Relu, Activation::Logistic,
                                                  Activation::Tanh};
            MlpModel mm;
            mm.activation = enum_from(p.at("activation").get<std::string>(), kAct, "activation");
            mm.epochs = p.value("epochs", std::size_t{0});
            std::size_t prev = m.n_features;
            for (const auto &l : p.at("layers")) {
                DenseLayer L;
                L.in = l.at("in").get<std::size_t>();
                L.out = l.at("out").get<std::size_t>();
                L.weights = l.at("weights").get<std::vector<double>>();
                L.bias = l.at("bias").get<std::vector<double>>();
                if (L.in != prev || L.weights.size() != L.in * L.out || L.bias.size() != L.out) {
                    throw Error(ErrorKind::ConfigParse, "malformed MLP layer");
                }
                prev = L.out;
                mm.layers.push_back(std::move(L));
            }
            if (mm.layers.empty() || prev != 1) {
                throw Error(ErrorKind::ConfigParse, "MLP must end in one output unit");
            }
            m.params = std::move(mm);
            break;
        }
        }
        return m;
    } catch (const json::exception &e) {
        throw Error(ErrorKind::ConfigParse, std::string("model: ") + e.what());
    }
}

std::string checksum(const TrainedModel &m) { return sha256_hex(to_json(m).dump()); }

// ------------------------------------------------------------------- grid

TrainedModel grid_search_cv(const std::vector<Hyperparams> &grid, const Matrix &x,
                            std::span<const int> y, const CvConfig &cv) {
    if (grid.empty()) {
        throw Error(ErrorKind::InvalidArgument, "grid is empty");
    }
    if (cv.folds < 2) {
        throw Error(ErrorKind::InvalidArgument, "need at least 2 folds");
    }
    if (y.size() != x.rows) {
        throw Error(ErrorKind::DimensionMismatch, "X and y differ in length");
    }
    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::quiet_NaN();
    if (grid.size() > 1 || !cv.skip_single_cell) {
        const std::size_t n = x.rows;
        const std::size_t k = std::min(cv.folds, n);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        Rng rng(derive_seed(cv.seed, {0xf01d}));
        for (std::size_t i = n; i > 1; --i) {
            std::swap(perm[i - 1], perm[rng.below(i)]);
        }
        std::vector<std::vector<std::size_t>> train_idx(k), valid_idx(k);
        for (std::size_t f = 0; f < k; ++f) {
            const std::size_t lo = f * n / k, hi = (f + 1) * n / k;
            for (std::size_t i = 0; i < n; ++i) {
                (i >= lo && i < hi ? valid_idx[f] : train_idx[f]).push_back(perm[i]);
            }
            std::sort(train_idx[f].begin(), train_idx[f].end());
        }
        std::vector<double> scores(grid.size() * k, std::numeric_limits<double>::quiet_NaN());
        parallel_for(grid.size() * k, [&](std::size_t task) {
            const std::size_t c = task / k, f = task % k;
            std::vector<int> ytr, yva;
            for (auto i : train_idx[f]) {
                ytr.push_back(y[i]);
            }
            for (auto i : valid_idx[f]) {
                yva.push_back(y[i]);
            }
            const auto has_both = [](const std::vector<int> &v) {
                const auto pos = std::count(v.begin(), v.end(), 1);
                return pos > 0 && pos < static_cast<std::ptrdiff_t>(v.size());
            };
            if (!has_both(ytr) || !has_both(yva)) {
                return;
            }
            const ModelSpec spec{grid[c], derive_seed(cv.seed, {f})};
            const auto model = train(spec, take_rows(x, train_idx[f]), ytr);
            scores[task] = auc(predict_proba(model, take_rows(x, valid_idx[f])), yva);
        });
        for (std::size_t c = 0; c < grid.size(); ++c) {
            double sum = 0.0;
            std::size_t used = 0;
            for (std::size_t f = 0; f < k; ++f) {
                if (std::isfinite(scores[c * k + f])) {
                    sum += scores[c * k + f];
                    ++used;
                }
            }
            if (used == 0) {
                continue;
            }
            const double mean = sum / static_cast<double>(used);
            if (!std::isfinite(best_score) || mean > best_score) {
                best_score = mean;
                best = c;
            }
        }
    }
    TrainedModel m = train(ModelSpec{grid[best], cv.seed}, x, y);
    m.grid_cell = best;
    m.validation_auc = best_score;
    return m;
}

std::vector<Hyperparams> reference_grid(Family f, std::size_t p) {
    std::vector<Hyperparams> g;
    switch (f) {
    case Family::LR:
        for (int k = 0; k <= 10; ++k) {
            g.push_back(LrParams{std::pow(10.0, -4.0 + 0.8 * k), 10000});
        }
        break;
    case Family::GBT:
        for (std::size_t d : {3, 5, 7, 9, 11}) {
            for (std::size_t n : {80, 100, 120, 140, 160, 180}) {
                for (double lr : {0.15, 0.1, 0.05, 0.01}) {
                    GbtParams hp;
                    hp.max_depth = d;
                    hp.n_estimators = n;
                    hp.learning_rate = lr;
                    g.push_back(hp);
                }
            }
        }
        break;
    case Family::RF:
        for (auto c : {Criterion::Gini, Criterion::Entropy, Criterion::LogLoss}) {
            for (std::size_t n : {80, 100, 120, 140, 160, 180}) {
                RfParams hp;
                hp.criterion = c;
                hp.n_estimators = n;
                g.push_back(hp);
            }
        }
        break;
    case Family::MLP:
        for (std::size_t depth = 1; depth <= 4; ++depth) {
            for (auto a : {Activation::Relu, Activation::Logistic, Activation::Tanh}) {
                for (auto s : {Schedule::Constant, Schedule::InvScaling, Schedule::Adaptive}) {
                    MlpParams hp;
                    hp.hidden = mlp_hidden_sizes(p, depth);
                    hp.activation = a;
                    hp.schedule = s;
                    g.push_back(hp);
                }
            }
        }
        break;
    }
    return g;
}

} // namespace qfill::learners
