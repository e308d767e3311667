// SPDX-License-Identifier: Apache-2.0
#include "qfill/learners/auc.hpp"

#include "qfill/common/error.hpp"

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

namespace qfill::learners {

std::optional<double> try_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw Error(ErrorKind::DimensionMismatch, "scores and labels differ in length");
    }
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of midranks of positives; ranks are 1-based and tie groups share
    // (first + last) / 2, a half-integer, so the sum is exact.
    double rank_sum_pos = 0.0;
    std::size_t n_pos = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) {
            ++j;
        }
        const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[order[k]] == 1) {
                rank_sum_pos += midrank;
                ++n_pos;
            }
        }
        i = j + 1;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        return std::nullopt;
    }
    const double np = static_cast<double>(n_pos);
    const double u = rank_sum_pos - np * (np + 1.0) / 2.0;
    return u / (np * static_cast<double>(n_neg));
}

double auc(std::span<const double> scores, std::span<const int> labels) {
    auto value = try_auc(scores, labels);
    if (!value) {
        throw Error(ErrorKind::SingleClassEval, "AUC needs both classes present");
    }
    return *value;
}

} // namespace qfill::learners
