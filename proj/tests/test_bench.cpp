#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include "effeval/bench.hpp"
#include "support.hpp"

using namespace effeval;
using namespace effeval::bench;

namespace {

constexpr std::uint64_t kMiB = 1u << 20;

// Keeps the optimizer from eliding a paired new/delete.
void escape(void* p) { asm volatile("" : : "g"(p) : "memory"); }

char* grab(std::size_t bytes) {
  auto* p = new char[bytes];
  escape(p);
  return p;
}

// Bytes the allocator may add on top of a request (chunk rounding, page rounding for mmap).
constexpr std::uint64_t kPerAllocationSlack = 4096;

ReportEntry entry(double ms, std::optional<double> pearson, std::string label) {
  ReportEntry e;
  e.record.metric_id = "bertscore";
  e.record.dataset_id = "wmt15";
  e.record.ms_per_segment = ms;
  e.pearson = pearson;
  e.label = std::move(label);
  return e;
}

}  // namespace

TEST_SUITE("bench") {
  TEST_CASE("hook is installed in this binary") { CHECK(tracker_installed()); }

  TEST_CASE("1 MiB allocation") {
    const auto bytes = peak_memory_probe([] {
      auto* p = grab(kMiB);
      delete[] p;
    });
    CHECK(bytes >= kMiB);
    CHECK(bytes < kMiB + 64 * 1024);
  }

  TEST_CASE("empty closure") { CHECK(peak_memory_probe([] {}) < 1024); }

  TEST_CASE("sequential allocations give the max, not the sum") {
    const auto bytes = peak_memory_probe([] {
      auto* a = grab(kMiB);
      delete[] a;
      auto* b = grab(2 * kMiB);
      delete[] b;
      auto* c = grab(kMiB / 2);
      delete[] c;
    });
    CHECK(bytes >= 2 * kMiB);
    CHECK(bytes < 2 * kMiB + kPerAllocationSlack);
  }

  TEST_CASE("nested probes keep the enclosing peak") {
    std::uint64_t inner = 0;
    const auto outer = peak_memory_probe([&] {
      auto* a = grab(kMiB);
      delete[] a;
      inner = peak_memory_probe([] {
        auto* b = grab(kMiB / 2);
        delete[] b;
      });
    });
    CHECK(inner >= kMiB / 2);
    CHECK(inner < kMiB / 2 + kPerAllocationSlack);
    CHECK(outer >= kMiB);
    CHECK(outer < kMiB + kPerAllocationSlack);
  }

  TEST_CASE("random allocation schedules match the running-sum oracle") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::size_t> size(1, 200000);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::size_t> sizes(40);
      for (auto& s : sizes) s = size(rng);
      std::vector<bool> frees(40);
      for (std::size_t i = 0; i < frees.size(); ++i) frees[i] = (rng() % 3) != 0;
      // oracle: a schedule alternates "allocate i" and, if frees[i], "free the oldest live block"
      std::uint64_t live = 0;
      std::uint64_t oracle_peak = 0;
      std::size_t max_live_blocks = 0;
      {
        std::vector<std::size_t> queue;
        std::size_t head = 0;
        for (std::size_t i = 0; i < sizes.size(); ++i) {
          live += sizes[i];
          queue.push_back(sizes[i]);
          oracle_peak = std::max(oracle_peak, live);
          max_live_blocks = std::max(max_live_blocks, queue.size() - head);
          if (frees[i]) live -= queue[head++];
        }
      }
      std::vector<void*> blocks(sizes.size());
      const auto measured = peak_memory_probe([&] {
        std::size_t head = 0;
        for (std::size_t i = 0; i < sizes.size(); ++i) {
          blocks[i] = ::operator new(sizes[i]);
          escape(blocks[i]);
          if (frees[i]) ::operator delete(blocks[head++]);
        }
        for (; head < sizes.size(); ++head) ::operator delete(blocks[head]);
      });
      CHECK(measured >= oracle_peak);
      CHECK(measured <= oracle_peak + kPerAllocationSlack * max_live_blocks);
    }
  }

  TEST_CASE("stub metric sleeping 10 ms per segment") {
    BenchmarkConfig cfg;
    cfg.metric_id = "stub";
    cfg.dataset_id = "toy";
    const auto rec = time_metric(
        [](StageRecorder&) {
          for (int i = 0; i < 10; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
        },
        10, cfg);
    CHECK(rec.runs() == 3);
    CHECK(rec.ms_per_segment >= 9.0);
    CHECK(rec.ms_per_segment <= 20.0);
    CHECK(rec.ms_per_segment == ms_per_segment(rec.run_seconds, 10));
    double mean = 0.0;
    for (double s : rec.run_seconds) mean += s;
    mean /= 3.0;
    CHECK(rec.ms_per_segment == doctest::Approx(mean * 1000.0 / 10.0).epsilon(1e-15));
  }

  TEST_CASE("stage timings stay within the run total") {
    BenchmarkConfig cfg;
    const auto rec = time_metric(
        [](StageRecorder& s) {
          {
            auto t = s.time(Stage::kLoadEmbeddings);
            std::this_thread::sleep_for(std::chrono::milliseconds(8));
          }
          {
            auto t = s.time(Stage::kDistance);
            std::this_thread::sleep_for(std::chrono::milliseconds(2));
          }
        },
        1, cfg);
    const double run_ms = rec.ms_per_segment;
    CHECK(rec.stages.total() <= run_ms * 1.1);
    CHECK(rec.stages[Stage::kLoadEmbeddings] > rec.stages[Stage::kDistance]);
    CHECK(rec.stages[Stage::kCostMatrix] == 0.0);
  }

  TEST_CASE("preconditions") {
    BenchmarkConfig cfg;
    cfg.runs = 2;
    CHECK_ERROR(time_metric([](StageRecorder&) {}, 1, cfg), ErrorCode::kPrecondition);
    cfg.runs = 3;
    CHECK_ERROR(time_metric([](StageRecorder&) {}, 0, cfg), ErrorCode::kPrecondition);
  }

  TEST_CASE("fingerprint tracks configuration") {
    BenchmarkConfig a;
    a.metric_id = "m";
    BenchmarkConfig b = a;
    CHECK(config_fingerprint(a) == config_fingerprint(b));
    b.batch_size = 4;
    CHECK(config_fingerprint(a) != config_fingerprint(b));
  }

  TEST_CASE("batch sweep") {
    const std::vector<double> base{0.1, 0.5, -0.3, 0.9};
    const BatchedMetric invariant = [&](std::size_t, StageRecorder&) { return base; };
    const std::vector<std::size_t> one{1};
    BenchmarkConfig cfg;
    cfg.warmup = false;
    const auto rows = sweep_batch_size(invariant, base.size(), one, cfg);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].record.batch_size == 1);

    const std::vector<double> human{0.2, 0.4, 0.0, 1.0};
    const auto all = sweep_batch_size(invariant, base.size(), kDefaultBatchSizes, cfg, human);
    REQUIRE(all.size() == 4);
    for (const auto& r : all) {
      CHECK(r.max_deviation == 0.0);
      CHECK(*r.pearson == *all[0].pearson);
    }

    const BatchedMetric drifting = [&](std::size_t size, StageRecorder&) {
      auto v = base;
      v[0] += 1e-6 * static_cast<double>(size - 1);
      return v;
    };
    CHECK_ERROR(sweep_batch_size(drifting, base.size(), kDefaultBatchSizes, cfg), ErrorCode::kBatchVariance);
  }

  TEST_CASE("carbon arithmetic") {
    CHECK(carbon_estimate(71, {kGpuPowerWatts, kUs2021GridIntensity}) == doctest::Approx(8.2218).epsilon(1e-12));
    CHECK(carbon_estimate(950, {kCpuPowerWatts, kUs2021GridIntensity}) == doctest::Approx(5.5005).epsilon(1e-12));
    CHECK(carbon_estimate(0, {123.0, 0.5}) == 0.0);
    CHECK_ERROR(carbon_estimate(1, {0.0, 0.5}), ErrorCode::kNonPositive);
    CHECK_ERROR(carbon_estimate(1, {10.0, -1.0}), ErrorCode::kNonPositive);
    CHECK_ERROR(carbon_estimate(-1, {10.0, 1.0}), ErrorCode::kNonPositive);
  }

  TEST_CASE("reports") {
    CHECK(emit_report({}, ReportFormat::kCsv) == std::string(kCsvHeader) + "\n");
    CHECK(emit_report({}, ReportFormat::kPlotData) == "x\ty\tlabel\n");

    std::vector<ReportEntry> one{entry(1.5, std::nullopt, "")};
    one[0].record.run_seconds = {0.1, 0.2, 0.3};
    one[0].record.stages.ms = {1, 2, 3.25, 4};
    const auto csv = emit_report(one, ReportFormat::kCsv);
    CHECK(csv == std::string(kCsvHeader) + "\nbertscore,wmt15,1,3,1.5,,1,2,3.25,4\n");
    one[0].record.peak_bytes = 4096;
    CHECK(emit_report(one, ReportFormat::kCsv).find(",1.5,4096,") != std::string::npos);
    CHECK(emit_report(one, ReportFormat::kCsv) == emit_report(one, ReportFormat::kCsv));
    CHECK(emit_report(one, ReportFormat::kMarkdown).find("| bertscore | wmt15 |") != std::string::npos);

    const std::vector<ReportEntry> pts{entry(422, 0.5856, "RoBERTa-L"), entry(15.8, 0.5300, "TinyBERT")};
    CHECK(emit_report(pts, ReportFormat::kPlotData) == "x\ty\tlabel\n422\t0.5856\tRoBERTa-L\n15.8\t0.5300\tTinyBERT\n");
    CHECK(parse_report_format("plotdata") == ReportFormat::kPlotData);
    CHECK_FALSE(parse_report_format("xml").has_value());
  }

  TEST_CASE("log-log slope of exact power laws") {
    const std::vector<double> n{16, 32, 64, 128, 256};
    std::vector<double> lin;
    std::vector<double> quad;
    for (double v : n) {
      lin.push_back(3.0 * v);
      quad.push_back(0.5 * v * v);
    }
    CHECK(loglog_slope(n, lin) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(loglog_slope(n, quad) == doctest::Approx(2.0).epsilon(1e-12));
  }
}
