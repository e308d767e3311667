// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "qfill/core/dataset.hpp"

#include <cstddef>
#include <span>
#include <vector>

#include "json.hpp"

namespace qfill::preprocess {

/// Per-feature standardization (x - mean) / scale, scale = sample standard
/// deviation (denominator n - 1). Zero-variance features are flagged and
/// get scale 1, so they always encode to angle 0.
class Scaler {
  public:
    Scaler() = default;
    Scaler(std::vector<double> mean, std::vector<double> scale,
           std::vector<std::size_t> degenerate = {});

    [[nodiscard]] const std::vector<double> &mean() const noexcept { return mean_; }
    [[nodiscard]] const std::vector<double> &scale() const noexcept { return scale_; }
    [[nodiscard]] const std::vector<std::size_t> &degenerate_features() const noexcept {
        return degenerate_;
    }
    [[nodiscard]] std::size_t feature_count() const noexcept { return mean_.size(); }

    /// Throws Error{DimensionMismatch}.
    [[nodiscard]] std::vector<double> standardize(std::span<const double> x) const;

  private:
    std::vector<double> mean_;
    std::vector<double> scale_;
    std::vector<std::size_t> degenerate_;
};

/// Throws Error{EmptyDataset} when fewer than two events are given.
Scaler fit_scaler(const EventDataset &dataset);

/// 2*pi*tanh(z / 3) per feature, z the standardized value. Results lie
/// strictly inside (-2*pi, 2*pi). Throws Error{DimensionMismatch}.
std::vector<double> encode_angles(std::span<const double> x, const Scaler &scaler);

nlohmann::json to_json(const Scaler &scaler);
Scaler scaler_from_json(const nlohmann::json &j);

} // namespace qfill::preprocess
