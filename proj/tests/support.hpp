// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "qfill/common/rng.hpp"
#include "qfill/core/dataset.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace qfill::testing {

/// Scratch directory removed on destruction.
class TempDir {
  public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("qfill-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    [[nodiscard]] const std::filesystem::path &path() const noexcept { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string &name) const {
        return path_ / name;
    }

  private:
    std::filesystem::path path_;
};

/// Uniform features in [-1, 1], labels with probability 1/2 (or missing with
/// probability `unlabeled`), strictly increasing timestamps.
inline EventDataset random_dataset(std::uint64_t seed, std::size_t n, std::size_t p,
                                   double unlabeled = 0.0) {
    Rng rng(seed);
    std::vector<TradeEvent> events;
    Timestamp t = 1'700'000'000'000'000LL;
    for (std::size_t i = 0; i < n; ++i) {
        TradeEvent e;
        t += 1 + static_cast<Timestamp>(rng.below(5'000'000));
        e.timestamp = t;
        e.event_id = i + 1;
        for (std::size_t j = 0; j < p; ++j) {
            e.features.push_back(2.0 * rng.uniform() - 1.0);
        }
        if (!rng.bernoulli(unlabeled)) {
            e.label = rng.bernoulli(0.5) ? 1 : 0;
        }
        events.push_back(std::move(e));
    }
    return EventDataset(std::move(events), p);
}

} // namespace qfill::testing
