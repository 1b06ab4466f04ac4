// Built without the allocation hook.

#include "effeval/bench.hpp"
#include "support.hpp"

using namespace effeval;
using namespace effeval::bench;

TEST_CASE("probe reports unavailability without the hook") {
  CHECK_FALSE(tracker_installed());
  CHECK_ERROR(peak_memory_probe([] {}), ErrorCode::kProbeUnavailable);
}

TEST_CASE("timing still works and leaves the peak empty") {
  BenchmarkConfig cfg;
  const auto rec = time_metric([](StageRecorder&) {}, 4, cfg);
  CHECK(rec.runs() == 3);
  CHECK_FALSE(rec.peak_bytes.has_value());
  std::vector<ReportEntry> rows{{rec, std::nullopt, ""}};
  const auto csv = emit_report(rows, ReportFormat::kCsv);
  CHECK(csv.find(",,") != std::string::npos);
}
