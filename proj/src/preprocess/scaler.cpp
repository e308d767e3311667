// SPDX-License-Identifier: Apache-2.0
#include "qfill/preprocess/scaler.hpp"

#include "qfill/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qfill::preprocess {

Scaler::Scaler(std::vector<double> mean, std::vector<double> scale,
               std::vector<std::size_t> degenerate)
    : mean_(std::move(mean)), scale_(std::move(scale)), degenerate_(std::move(degenerate)) {
    if (mean_.size() != scale_.size()) {
        throw Error(ErrorKind::DimensionMismatch, "scaler mean/scale lengths differ");
    }
    for (double w : scale_) {
        if (!(w > 0.0)) {
            throw Error(ErrorKind::InvalidArgument, "scaler scale must be positive");
        }
    }
}

std::vector<double> Scaler::standardize(std::span<const double> x) const {
    if (x.size() != mean_.size()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "expected " + std::to_string(mean_.size()) + " features, got " +
                        std::to_string(x.size()));
    }
    std::vector<double> z(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        z[j] = (x[j] - mean_[j]) / scale_[j];
    }
    return z;
}

Scaler fit_scaler(const EventDataset &dataset) {
    const std::size_t n = dataset.size();
    if (n < 2) {
        throw Error(ErrorKind::EmptyDataset, "fit_scaler needs at least two events");
    }
    const std::size_t p = dataset.feature_count();
    std::vector<double> mean(p, 0.0), scale(p, 0.0);
    std::vector<std::size_t> degenerate;
    for (std::size_t j = 0; j < p; ++j) {
        double sum = 0.0;
        for (const auto &e : dataset.events()) {
            sum += e.features[j];
        }
        mean[j] = sum / static_cast<double>(n);
        double ss = 0.0;
        for (const auto &e : dataset.events()) {
            const double d = e.features[j] - mean[j];
            ss += d * d;
        }
        scale[j] = std::sqrt(ss / static_cast<double>(n - 1));
        if (!(scale[j] > 0.0)) {
            degenerate.push_back(j);
            scale[j] = 1.0;
        }
    }
    return Scaler(std::move(mean), std::move(scale), std::move(degenerate));
}

std::vector<double> encode_angles(std::span<const double> x, const Scaler &scaler) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    // tanh saturates to exactly 1.0 in double for |z| beyond ~57.
    static const double limit = std::nextafter(two_pi, 0.0);
    auto z = scaler.standardize(x);
    for (double &v : z) {
        v = std::clamp(two_pi * std::tanh(v / 3.0), -limit, limit);
    }
    for (std::size_t j : scaler.degenerate_features()) {
        z[j] = 0.0;
    }
    return z;
}

nlohmann::json to_json(const Scaler &s) {
    return {{"mean", s.mean()}, {"scale", s.scale()}, {"degenerate", s.degenerate_features()}};
}

Scaler scaler_from_json(const nlohmann::json &j) {
    try {
        return Scaler(j.at("mean").get<std::vector<double>>(),
                      j.at("scale").get<std::vector<double>>(),
                      j.value("degenerate", std::vector<std::size_t>{}));
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorKind::ConfigParse, std::string("scaler: ") + e.what());
    }
}

} // namespace qfill::preprocess
