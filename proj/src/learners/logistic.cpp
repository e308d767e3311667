// SPDX-License-Identifier: Apache-2.0
#include "qfill/common/error.hpp"
#include "qfill/learners/model.hpp"
#include "qfill/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace qfill::learners {

namespace {

// log(1 + exp(t)) without overflow.
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t) {
    if (t >= 0.0) {
        return 1.0 / (1.0 + std::exp(-t));
    }
    const double e = std::exp(t);
    return e / (1.0 + e);
}

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

} // namespace

std::pair<double, std::vector<double>> logistic_objective(std::span<const double> params,
                                                          const Matrix &x,
                                                          std::span<const int> y, double C) {
    const std::size_t n = x.rows, p = x.cols;
    if (params.size() != p + 1 || y.size() != n) {
        throw Error(ErrorKind::DimensionMismatch, "logistic objective shape mismatch");
    }
    const auto w = params.first(p);
    const double b = params[p];
    std::vector<double> grad(p + 1, 0.0);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto xi = x.row(i);
        const double z = simd::dot(w, xi) + b;
        // loss_i = softplus(z) - y z; dloss/dz = sigmoid(z) - y
        loss += softplus(z) - (y[i] == 1 ? z : 0.0);
        const double r = sigmoid(z) - (y[i] == 1 ? 1.0 : 0.0);
        simd::axpy(r, xi, std::span<double>(grad).first(p));
        grad[p] += r;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    const double reg = 1.0 / (C * static_cast<double>(n));
    double wsq = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        wsq += w[j] * w[j];
        grad[j] = grad[j] * inv_n + reg * w[j];
    }
    grad[p] *= inv_n;
    return {loss * inv_n + 0.5 * reg * wsq, std::move(grad)};
}

LogisticModel train_logistic(const LrParams &hp, const Matrix &x, std::span<const int> y) {
    if (!(hp.C > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "C must be positive");
    }
    const std::size_t dim = x.cols + 1;
    constexpr std::size_t kHistory = 10;
    constexpr double kTol = 1e-6;

    std::vector<double> theta(dim, 0.0);
    auto [f, g] = logistic_objective(theta, x, y, hp.C);
    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;
    std::size_t it = 0;
    for (; it < hp.max_iter && inf_norm(g) > kTol; ++it) {
        // Two-loop recursion for d = -H g.
        std::vector<double> q = g;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t k = s_hist.size(); k-- > 0;) {
            alpha[k] = rho_hist[k] * simd::dot(s_hist[k], q);
            simd::axpy(-alpha[k], y_hist[k], q);
        }
        if (!s_hist.empty()) {
            const double gamma =
                simd::dot(s_hist.back(), y_hist.back()) / simd::dot(y_hist.back(), y_hist.back());
            for (double &v : q) {
                v *= gamma;
            }
        }
        for (std::size_t k = 0; k < s_hist.size(); ++k) {
            const double beta = rho_hist[k] * simd::dot(y_hist[k], q);
            simd::axpy(alpha[k] - beta, s_hist[k], q);
        }
        std::vector<double> d(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            d[j] = -q[j];
        }
        double slope = simd::dot(g, d);
        if (!(slope < 0.0)) {
            // Not a descent direction; restart from steepest descent.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            for (std::size_t j = 0; j < dim; ++j) {
                d[j] = -g[j];
            }
            slope = simd::dot(g, d);
        }
        double step = 1.0;
        std::vector<double> trial(dim);
        double f_new = 0.0;
        std::vector<double> g_new;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t j = 0; j < dim; ++j) {
                trial[j] = theta[j] + step * d[j];
            }
            std::tie(f_new, g_new) = logistic_objective(trial, x, y, hp.C);
            if (f_new <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            break;
        }
        std::vector<double> s(dim), yv(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            s[j] = trial[j] - theta[j];
            yv[j] = g_new[j] - g[j];
        }
        const double sy = simd::dot(s, yv);
        if (sy > 1e-12 * simd::dot(yv, yv)) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(yv));
            rho_hist.push_back(1.0 / sy);
            if (s_hist.size() > kHistory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        const bool stalled = std::abs(f - f_new) <= 1e-15 * std::max(1.0, std::abs(f));
        theta.swap(trial);
        f = f_new;
        g = std::move(g_new);
        if (stalled) {
            ++it;
            break;
        }
    }
    LogisticModel m;
    m.weights.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(x.cols));
    m.intercept = theta.back();
    m.iterations = it;
    return m;
}

double predict_logistic(const LogisticModel &m, std::span<const double> x) {
    return sigmoid(simd::dot(m.weights, x) + m.intercept);
}

} // namespace qfill::learners
