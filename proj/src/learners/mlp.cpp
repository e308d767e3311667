// SPDX-License-Identifier: Apache-2.0
#include "qfill/common/error.hpp"
#include "qfill/common/rng.hpp"
#include "qfill/learners/model.hpp"
#include "qfill/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace qfill::learners {

namespace {

double sigmoid(double t) {
    if (t >= 0.0) {
        return 1.0 / (1.0 + std::exp(-t));
    }
    const double e = std::exp(t);
    return e / (1.0 + e);
}

double activate(Activation a, double z) {
    switch (a) {
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Logistic: return sigmoid(z);
    case Activation::Tanh: return std::tanh(z);
    }
    return z;
}

// Derivative expressed through the activation value h.
double activate_grad(Activation a, double h) {
    switch (a) {
    case Activation::Relu: return h > 0.0 ? 1.0 : 0.0;
    case Activation::Logistic: return h * (1.0 - h);
    case Activation::Tanh: return 1.0 - h * h;
    }
    return 1.0;
}

// Layer outputs for one sample; acts[0] is the input.
void forward(const MlpModel &m, std::span<const double> x, std::vector<std::vector<double>> &acts) {
    acts.resize(m.layers.size() + 1);
    acts[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        const auto &L = m.layers[l];
        auto &out = acts[l + 1];
        out.resize(L.out);
        const bool last = l + 1 == m.layers.size();
        for (std::size_t o = 0; o < L.out; ++o) {
            const double z =
                simd::dot(std::span<const double>(L.weights).subspan(o * L.in, L.in), acts[l]) +
                L.bias[o];
            out[o] = last ? sigmoid(z) : activate(m.activation, z);
        }
    }
}

} // namespace

std::vector<std::size_t> mlp_hidden_sizes(std::size_t p, std::size_t depth) {
    static constexpr double kFractions[4] = {1.2, 0.9, 0.6, 0.3};
    depth = std::clamp<std::size_t>(depth, 1, 4);
    std::vector<std::size_t> sizes;
    for (std::size_t d = 0; d < depth; ++d) {
        sizes.push_back(std::max<std::size_t>(
            1, static_cast<std::size_t>(std::lround(kFractions[d] * static_cast<double>(p)))));
    }
    return sizes;
}

MlpModel train_mlp(const MlpParams &hp, const Matrix &x, std::span<const int> y,
                   std::uint64_t seed) {
    if (hp.max_iter == 0 || hp.batch_size == 0 || !(hp.learning_rate_init > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "invalid MLP parameters");
    }
    for (auto h : hp.hidden) {
        if (h == 0) {
            throw Error(ErrorKind::InvalidArgument, "hidden layer sizes must be positive");
        }
    }
    const std::size_t n = x.rows;
    Rng rng(seed);
    MlpModel m;
    m.activation = hp.activation;
    std::vector<std::size_t> widths{x.cols};
    widths.insert(widths.end(), hp.hidden.begin(), hp.hidden.end());
    widths.push_back(1);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        DenseLayer L;
        L.in = widths[l];
        L.out = widths[l + 1];
        const double factor = hp.activation == Activation::Logistic ? 2.0 : 6.0;
        const double bound = std::sqrt(factor / static_cast<double>(L.in + L.out));
        L.weights.resize(L.in * L.out);
        L.bias.resize(L.out);
        for (double &w : L.weights) {
            w = bound * (2.0 * rng.uniform() - 1.0);
        }
        for (double &b : L.bias) {
            b = bound * (2.0 * rng.uniform() - 1.0);
        }
        m.layers.push_back(std::move(L));
    }

    const std::size_t batch = std::min(hp.batch_size, n);
    std::vector<DenseLayer> velocity = m.layers;
    std::vector<DenseLayer> grad = m.layers;
    for (auto *set : {&velocity, &grad}) {
        for (auto &L : *set) {
            std::fill(L.weights.begin(), L.weights.end(), 0.0);
            std::fill(L.bias.begin(), L.bias.end(), 0.0);
        }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::vector<double>> acts;
    std::vector<std::vector<double>> deltas(m.layers.size());

    double lr = hp.learning_rate_init;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t no_improve = 0;
    std::size_t epoch = 0;
    for (; epoch < hp.max_iter; ++epoch) {
        for (std::size_t k = n; k > 1; --k) {
            std::swap(order[k - 1], order[rng.below(k)]);
        }
        if (hp.schedule == Schedule::InvScaling) {
            lr = hp.learning_rate_init / std::sqrt(static_cast<double>(epoch + 1));
        }
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t end = std::min(n, start + batch);
            const double bsz = static_cast<double>(end - start);
            for (auto &L : grad) {
                std::fill(L.weights.begin(), L.weights.end(), 0.0);
                std::fill(L.bias.begin(), L.bias.end(), 0.0);
            }
            for (std::size_t b = start; b < end; ++b) {
                const std::size_t i = order[b];
                forward(m, x.row(i), acts);
                const double p = std::clamp(acts.back()[0], 1e-15, 1.0 - 1e-15);
                epoch_loss += y[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
                // Output delta of logistic + log-loss is p - y.
                deltas.back().assign(1, acts.back()[0] - y[i]);
                for (std::size_t l = m.layers.size(); l-- > 0;) {
                    const auto &L = m.layers[l];
                    auto &G = grad[l];
                    const auto &d = deltas[l];
                    for (std::size_t o = 0; o < L.out; ++o) {
                        simd::axpy(d[o], acts[l],
                                   std::span<double>(G.weights).subspan(o * L.in, L.in));
                        G.bias[o] += d[o];
                    }
                    if (l == 0) {
                        break;
                    }
                    auto &prev = deltas[l - 1];
                    prev.assign(L.in, 0.0);
                    for (std::size_t o = 0; o < L.out; ++o) {
                        simd::axpy(d[o], std::span<const double>(L.weights).subspan(o * L.in, L.in),
                                   prev);
                    }
                    for (std::size_t u = 0; u < L.in; ++u) {
                        prev[u] *= activate_grad(m.activation, acts[l][u]);
                    }
                }
            }
            for (std::size_t l = 0; l < m.layers.size(); ++l) {
                auto &L = m.layers[l];
                auto &G = grad[l];
                auto &V = velocity[l];
                for (std::size_t k = 0; k < L.weights.size(); ++k) {
                    const double g = G.weights[k] / bsz + hp.alpha * L.weights[k] / bsz;
                    V.weights[k] = hp.momentum * V.weights[k] - lr * g;
                    L.weights[k] += V.weights[k];
                }
                for (std::size_t k = 0; k < L.bias.size(); ++k) {
                    V.bias[k] = hp.momentum * V.bias[k] - lr * G.bias[k] / bsz;
                    L.bias[k] += V.bias[k];
                }
            }
        }
        double wsq = 0.0;
        for (const auto &L : m.layers) {
            for (double w : L.weights) {
                wsq += w * w;
            }
        }
        const double loss = epoch_loss / static_cast<double>(n) +
                            0.5 * hp.alpha * wsq / static_cast<double>(n);
        if (!std::isfinite(loss)) {
            break;
        }
        if (loss > best_loss - hp.tol) {
            ++no_improve;
        } else {
            no_improve = 0;
        }
        best_loss = std::min(best_loss, loss);
        if (hp.schedule == Schedule::Adaptive) {
            if (no_improve >= 2) {
                lr /= 5.0;
                no_improve = 0;
                if (lr < 1e-6) {
                    ++epoch;
                    break;
                }
            }
        } else if (no_improve >= hp.n_iter_no_change) {
            ++epoch;
            break;
        }
    }
    m.epochs = epoch;
    return m;
}

double predict_mlp(const MlpModel &m, std::span<const double> x) {
    thread_local std::vector<std::vector<double>> acts;
    forward(m, x, acts);
    return acts.back()[0];
}

} // namespace qfill::learners
