// SPDX-License-Identifier: Apache-2.0
#include "qfill/common/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace qfill {
namespace {

std::atomic<std::size_t> g_threads{0};

std::size_t default_threads() noexcept {
    if (const char *env = std::getenv("QFILL_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) {
                return static_cast<std::size_t>(v);
            }
        } catch (...) {
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

} // namespace

void set_thread_count(std::size_t n) noexcept { g_threads.store(n); }

std::size_t thread_count() noexcept {
    const std::size_t n = g_threads.load();
    return n == 0 ? default_threads() : n;
}

} // namespace qfill
