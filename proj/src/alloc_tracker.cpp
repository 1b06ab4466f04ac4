#include <atomic>
#include <cstdint>

#include "effeval/bench.hpp"
#include "effeval/effeval.h"

namespace {

std::atomic<bool> g_installed{false};
std::atomic<std::uint64_t> g_current{0};
std::atomic<std::uint64_t> g_peak{0};

}  // namespace

extern "C" {

void effeval_tracker_install(void) { g_installed.store(true, std::memory_order_relaxed); }

void effeval_tracker_note_alloc(size_t bytes) {
  const auto now = g_current.fetch_add(bytes, std::memory_order_relaxed) + bytes;
  auto peak = g_peak.load(std::memory_order_relaxed);
  while (now > peak && !g_peak.compare_exchange_weak(peak, now, std::memory_order_relaxed)) {
  }
}

void effeval_tracker_note_free(size_t bytes) { g_current.fetch_sub(bytes, std::memory_order_relaxed); }

int effeval_tracker_installed(void) { return g_installed.load(std::memory_order_relaxed) ? 1 : 0; }

}  // extern "C"

namespace effeval::bench {

bool tracker_installed() noexcept { return g_installed.load(std::memory_order_relaxed); }

std::uint64_t tracker_current_bytes() noexcept { return g_current.load(std::memory_order_relaxed); }

std::uint64_t tracker_peak_bytes() noexcept { return g_peak.load(std::memory_order_relaxed); }

void tracker_merge_peak(std::uint64_t bytes) noexcept {
  auto peak = g_peak.load(std::memory_order_relaxed);
  while (bytes > peak && !g_peak.compare_exchange_weak(peak, bytes, std::memory_order_relaxed)) {
  }
}

void tracker_reset_peak() noexcept {
  g_peak.store(g_current.load(std::memory_order_relaxed), std::memory_order_relaxed);
}

}  // namespace effeval::bench
