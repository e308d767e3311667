// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>

namespace qfill::learners {

/// Area under the ROC curve by rank sum with midranks, O(n log n).
/// Equals (#concordant + 0.5 * #tied) / (#pos * #neg) over positive-negative
/// pairs. Labels are 0/1. Throws Error{SingleClassEval} if a class is absent.
double auc(std::span<const double> scores, std::span<const int> labels);

/// As auc(), but nullopt instead of throwing for single-class input.
std::optional<double> try_auc(std::span<const double> scores, std::span<const int> labels);

} // namespace qfill::learners
