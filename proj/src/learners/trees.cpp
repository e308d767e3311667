// SPDX-License-Identifier: Apache-2.0
#include "qfill/common/error.hpp"
#include "qfill/common/rng.hpp"
#include "qfill/learners/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

namespace qfill::learners {

double Tree::predict(std::span<const double> x) const {
    int k = 0;
    while (nodes[static_cast<std::size_t>(k)].feature >= 0) {
        const auto &n = nodes[static_cast<std::size_t>(k)];
        k = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(k)].value;
}

namespace {

// Per-feature histogram bins. Edges sit between distinct training values,
// so splits depend only on the order of the data and scale with it.
struct Binned {
    std::size_t n = 0;
    std::vector<std::vector<double>> edges;
    std::vector<std::uint8_t> codes;  // feature-major: codes[j * n + i]

    [[nodiscard]] std::uint8_t code(std::size_t i, std::size_t j) const { return codes[j * n + i]; }
};

double between(double a, double b) {
    const double m = a + 0.5 * (b - a);
    return m < b ? m : a;
}

Binned bin_features(const Matrix &x, std::size_t max_bins) {
    max_bins = std::clamp<std::size_t>(max_bins, 2, 256);
    Binned out;
    out.n = x.rows;
    out.edges.resize(x.cols);
    out.codes.resize(x.rows * x.cols);
    std::vector<double> col(x.rows);
    for (std::size_t j = 0; j < x.cols; ++j) {
        for (std::size_t i = 0; i < x.rows; ++i) {
            col[i] = x(i, j);
        }
        std::vector<double> sorted = col;
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> distinct = sorted;
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        auto &e = out.edges[j];
        if (distinct.size() <= max_bins) {
            for (std::size_t k = 0; k + 1 < distinct.size(); ++k) {
                e.push_back(between(distinct[k], distinct[k + 1]));
            }
        } else {
            for (std::size_t b = 1; b < max_bins; ++b) {
                const double v = sorted[b * sorted.size() / max_bins];
                const auto k = static_cast<std::size_t>(
                    std::lower_bound(distinct.begin(), distinct.end(), v) - distinct.begin());
                if (k == 0) {
                    continue;
                }
                const double edge = between(distinct[k - 1], distinct[k]);
                if (e.empty() || e.back() < edge) {
                    e.push_back(edge);
                }
            }
        }
        for (std::size_t i = 0; i < x.rows; ++i) {
            out.codes[j * x.rows + i] = static_cast<std::uint8_t>(
                std::lower_bound(e.begin(), e.end(), col[i]) - e.begin());
        }
    }
    return out;
}

// Per-sample statistics (a, b): gradient/hessian for boosting,
// weighted-positive/weight for classification trees.
struct Stat {
    double a = 0.0;
    double b = 0.0;
};

struct Split {
    bool found = false;
    std::size_t feature = 0;
    std::size_t bin = 0;  // left side holds codes <= bin
    double score = 0.0;
};

template <class Scorer> class TreeBuilder {
  public:
    TreeBuilder(const Binned &bins, const std::vector<Stat> &stats, const Scorer &scorer,
                std::size_t max_depth)
        : bins_(bins), stats_(stats), scorer_(scorer), max_depth_(max_depth) {}

    template <class FeaturePicker>
    Tree build(std::vector<std::size_t> samples, FeaturePicker &&pick) {
        Tree t;
        grow(t, samples, 0, samples.size(), 0, pick);
        return t;
    }

  private:
    template <class FeaturePicker>
    int grow(Tree &t, std::vector<std::size_t> &s, std::size_t lo, std::size_t hi,
             std::size_t depth, FeaturePicker &pick) {
        Stat total;
        for (std::size_t k = lo; k < hi; ++k) {
            total.a += stats_[s[k]].a;
            total.b += stats_[s[k]].b;
        }
        const int id = static_cast<int>(t.nodes.size());
        t.nodes.push_back({});
        t.nodes.back().value = scorer_.leaf(total);
        if ((max_depth_ > 0 && depth >= max_depth_) || !scorer_.splittable(total, hi - lo)) {
            return id;
        }
        Split best;
        std::vector<Stat> hist;
        auto evaluate = [&](std::size_t j) {
            const std::size_t nb = bins_.edges[j].size() + 1;
            if (nb < 2) {
                return false;
            }
            hist.assign(nb, Stat{});
            for (std::size_t k = lo; k < hi; ++k) {
                auto &h = hist[bins_.code(s[k], j)];
                h.a += stats_[s[k]].a;
                h.b += stats_[s[k]].b;
            }
            bool valid = false;
            Stat left;
            for (std::size_t b = 0; b + 1 < nb; ++b) {
                left.a += hist[b].a;
                left.b += hist[b].b;
                const Stat right{total.a - left.a, total.b - left.b};
                const auto score = scorer_.gain(left, right, total);
                if (!score) {
                    continue;
                }
                valid = true;
                if (!best.found || *score > best.score) {
                    best = {true, j, b, *score};
                }
            }
            return valid;
        };
        pick(evaluate);
        if (!best.found || !scorer_.accept(best.score)) {
            return id;
        }
        const auto mid_it = std::partition(
            s.begin() + static_cast<std::ptrdiff_t>(lo), s.begin() + static_cast<std::ptrdiff_t>(hi),
            [&](std::size_t i) { return bins_.code(i, best.feature) <= best.bin; });
        const auto mid = static_cast<std::size_t>(mid_it - s.begin());
        if (mid == lo || mid == hi) {
            return id;
        }
        const int l = grow(t, s, lo, mid, depth + 1, pick);
        const int r = grow(t, s, mid, hi, depth + 1, pick);
        auto &node = t.nodes[static_cast<std::size_t>(id)];
        node.feature = static_cast<int>(best.feature);
        node.threshold = bins_.edges[best.feature][best.bin];
        node.left = l;
        node.right = r;
        return id;
    }

    const Binned &bins_;
    const std::vector<Stat> &stats_;
    const Scorer &scorer_;
    std::size_t max_depth_;
};

struct BoostScorer {
    double lambda;
    double min_child_weight;

    [[nodiscard]] double leaf(const Stat &s) const { return -s.a / (s.b + lambda); }
    [[nodiscard]] bool splittable(const Stat &s, std::size_t count) const {
        return count >= 2 && s.b >= 2.0 * min_child_weight;
    }
    [[nodiscard]] std::optional<double> gain(const Stat &l, const Stat &r, const Stat &t) const {
        if (l.b < min_child_weight || r.b < min_child_weight) {
            return std::nullopt;
        }
        return l.a * l.a / (l.b + lambda) + r.a * r.a / (r.b + lambda) - t.a * t.a / (t.b + lambda);
    }
    [[nodiscard]] bool accept(double score) const { return score > 0.0; }
};

struct ClassScorer {
    Criterion criterion;

    [[nodiscard]] double impurity(const Stat &s) const {
        if (s.b <= 0.0) {
            return 0.0;
        }
        const double p = s.a / s.b;
        if (criterion == Criterion::Gini) {
            return 2.0 * p * (1.0 - p);
        }
        double h = 0.0;
        if (p > 0.0) {
            h -= p * std::log2(p);
        }
        if (p < 1.0) {
            h -= (1.0 - p) * std::log2(1.0 - p);
        }
        return h;
    }
    [[nodiscard]] double leaf(const Stat &s) const { return s.b > 0.0 ? s.a / s.b : 0.0; }
    [[nodiscard]] bool splittable(const Stat &s, std::size_t count) const {
        return count >= 2 && s.a > 0.0 && s.a < s.b;
    }
    [[nodiscard]] std::optional<double> gain(const Stat &l, const Stat &r, const Stat &t) const {
        if (l.b <= 0.0 || r.b <= 0.0) {
            return std::nullopt;
        }
        return t.b * impurity(t) - l.b * impurity(l) - r.b * impurity(r);
    }
    [[nodiscard]] bool accept(double) const { return true; }
};

double sigmoid(double t) {
    if (t >= 0.0) {
        return 1.0 / (1.0 + std::exp(-t));
    }
    const double e = std::exp(t);
    return e / (1.0 + e);
}

} // namespace

GbtModel train_gbt(const GbtParams &hp, const Matrix &x, std::span<const int> y) {
    if (hp.n_estimators == 0 || hp.max_depth == 0 || !(hp.learning_rate > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "invalid boosting parameters");
    }
    const std::size_t n = x.rows;
    const Binned bins = bin_features(x, hp.max_bins);
    double pos = 0.0;
    for (int v : y) {
        pos += v;
    }
    const double prior = pos / static_cast<double>(n);
    GbtModel m;
    m.base_score = std::log(prior / (1.0 - prior));
    m.learning_rate = hp.learning_rate;
    std::vector<double> margin(n, m.base_score);
    std::vector<Stat> stats(n);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const BoostScorer scorer{hp.lambda, hp.min_child_weight};
    auto every_feature = [&](auto &evaluate) {
        for (std::size_t j = 0; j < x.cols; ++j) {
            evaluate(j);
        }
    };
    for (std::size_t t = 0; t < hp.n_estimators; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(margin[i]);
            stats[i] = {p - y[i], std::max(p * (1.0 - p), 1e-16)};
        }
        TreeBuilder<BoostScorer> builder(bins, stats, scorer, hp.max_depth);
        Tree tree = builder.build(all, every_feature);
        for (std::size_t i = 0; i < n; ++i) {
            margin[i] += hp.learning_rate * tree.predict(x.row(i));
        }
        m.trees.push_back(std::move(tree));
    }
    return m;
}

double predict_gbt(const GbtModel &m, std::span<const double> x) {
    double s = m.base_score;
    for (const auto &t : m.trees) {
        s += m.learning_rate * t.predict(x);
    }
    return sigmoid(s);
}

RfModel train_rf(const RfParams &hp, const Matrix &x, std::span<const int> y,
                 std::uint64_t seed) {
    if (hp.n_estimators == 0) {
        throw Error(ErrorKind::InvalidArgument, "n_estimators must be positive");
    }
    const std::size_t n = x.rows, p = x.cols;
    const std::size_t mtry = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(p)))));
    const Binned bins = bin_features(x, hp.max_bins);
    const ClassScorer scorer{hp.criterion == Criterion::Gini ? Criterion::Gini
                                                             : Criterion::Entropy};
    RfModel m;
    m.trees.reserve(hp.n_estimators);
    std::vector<Stat> stats(n);
    for (std::size_t t = 0; t < hp.n_estimators; ++t) {
        Rng rng(derive_seed(seed, {t}));
        std::vector<double> count(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            count[rng.below(n)] += 1.0;
        }
        std::vector<std::size_t> in_bag;
        for (std::size_t i = 0; i < n; ++i) {
            stats[i] = {count[i] * y[i], count[i]};
            if (count[i] > 0.0) {
                in_bag.push_back(i);
            }
        }
        std::vector<std::size_t> order(p);
        // Visit mtry random features; keep drawing past mtry only while no
        // feature has admitted a split.
        auto sample_features = [&](auto &evaluate) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::size_t valid = 0;
            for (std::size_t k = 0; k < p; ++k) {
                const auto r = k + rng.below(p - k);
                std::swap(order[k], order[r]);
                if (evaluate(order[k])) {
                    ++valid;
                }
                if (k + 1 >= mtry && valid > 0) {
                    break;
                }
            }
        };
        TreeBuilder<ClassScorer> builder(bins, stats, scorer, hp.max_depth);
        m.trees.push_back(builder.build(std::move(in_bag), sample_features));
    }
    return m;
}

double predict_rf(const RfModel &m, std::span<const double> x) {
    double s = 0.0;
    for (const auto &t : m.trees) {
        s += t.predict(x);
    }
    return s / static_cast<double>(m.trees.size());
}

} // namespace qfill::learners
