#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace effeval::bench {

enum class Stage { kLoadEmbeddings, kCostMatrix, kDistance, kAggregate };
inline constexpr std::size_t kStageCount = 4;

std::string_view stage_name(Stage stage) noexcept;

struct StageTimings {
  std::array<double, kStageCount> ms{};

  double& operator[](Stage s) noexcept { return ms[static_cast<std::size_t>(s)]; }
  double operator[](Stage s) const noexcept { return ms[static_cast<std::size_t>(s)]; }
  double total() const noexcept;
};

/// Accumulates wall time per stage; scopes may be opened repeatedly.
class StageRecorder {
 public:
  class Scope {
   public:
    Scope(StageRecorder& owner, Stage stage) noexcept;
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;
    ~Scope();

   private:
    StageRecorder& owner_;
    Stage stage_;
    std::chrono::steady_clock::time_point start_;
  };

  Scope time(Stage stage) noexcept { return Scope(*this, stage); }
  void add(Stage stage, double ms) noexcept { timings_[stage] += ms; }
  const StageTimings& timings() const noexcept { return timings_; }
  void reset() noexcept { timings_ = {}; }

 private:
  StageTimings timings_;
};

// Allocation accounting. The counters are fed by the operator new/delete
// replacement in alloc_hook.cpp; without it the probe reports unavailable.
bool tracker_installed() noexcept;
std::uint64_t tracker_current_bytes() noexcept;
std::uint64_t tracker_peak_bytes() noexcept;
void tracker_reset_peak() noexcept;
/// Raises the recorded peak to at least `bytes`.
void tracker_merge_peak(std::uint64_t bytes) noexcept;

/// High-water mark of tracked bytes above the level at entry while `run`
/// executes. Throws kProbeUnavailable without the allocation hook.
std::uint64_t peak_memory_probe(const std::function<void()>& run);

inline constexpr std::size_t kMinRuns = 3;

struct BenchmarkConfig {
  std::string metric_id;
  std::string dataset_id;
  std::size_t runs = kMinRuns;
  std::size_t batch_size = 1;
  std::string extra;          // further configuration folded into the fingerprint
  bool warmup = true;         // one discarded run before the measured ones
  bool probe_memory = true;   // ignored when the tracker is not installed
};

std::uint64_t config_fingerprint(const BenchmarkConfig& config);

struct BenchmarkRecord {
  std::string metric_id;
  std::string dataset_id;
  std::size_t batch_size = 1;
  std::size_t segment_count = 0;
  std::vector<double> run_seconds;
  double ms_per_segment = 0.0;
  StageTimings stages;  // mean per measured run
  std::optional<std::uint64_t> peak_bytes;
  std::uint64_t fingerprint = 0;

  std::size_t runs() const noexcept { return run_seconds.size(); }
};

/// mean(run_seconds) * 1000 / segment_count
double ms_per_segment(std::span<const double> run_seconds, std::size_t segment_count);

/// One full pass of a metric over a dataset, reporting its stages.
using RunFn = std::function<void(StageRecorder&)>;

/// Warm-up plus `config.runs` measured passes on a monotonic clock.
/// Throws kPrecondition for runs < 3 or an empty dataset; metric errors
/// propagate unchanged.
BenchmarkRecord time_metric(const RunFn& run, std::size_t segment_count,
                            const BenchmarkConfig& config);

/// Scores every segment processing `batch_size` segments at a time.
using BatchedMetric = std::function<std::vector<double>(std::size_t batch_size, StageRecorder&)>;

inline constexpr double kBatchTolerance = 1e-9;
inline constexpr std::array<std::size_t, 4> kDefaultBatchSizes{1, 4, 16, 64};

struct SweepRow {
  BenchmarkRecord record;
  std::vector<double> values;
  double max_deviation = 0.0;  // against the batch-size-1 values
  std::optional<double> pearson;
};

/// Benchmarks the metric at each batch size and checks that every size
/// reproduces the batch-size-1 values within kBatchTolerance (kBatchVariance
/// otherwise). Pearson r is filled when human scores are given.
std::vector<SweepRow> sweep_batch_size(const BatchedMetric& metric, std::size_t segment_count,
                                       std::span<const std::size_t> sizes,
                                       const BenchmarkConfig& base,
                                       std::span<const double> human_scores = {});

// Carbon accounting: kg CO2-eq = hours * kW * kg/kWh.
inline constexpr double kUs2021GridIntensity = 0.386;  // kg CO2-eq per kWh
inline constexpr double kGpuPowerWatts = 300.0;
inline constexpr double kCpuPowerWatts = 15.0;

struct CarbonAssumptions {
  double power_watts = kGpuPowerWatts;
  double grid_intensity_kg_per_kwh = kUs2021GridIntensity;
};

/// Throws kNonPositive for negative hours or non-positive assumptions.
double carbon_estimate(double runtime_hours, const CarbonAssumptions& assumptions);

enum class ReportFormat { kCsv, kMarkdown, kPlotData };

std::optional<ReportFormat> parse_report_format(std::string_view name) noexcept;

inline constexpr std::string_view kCsvHeader =
    "metric_id,dataset_id,batch_size,runs,ms_per_segment,peak_bytes,"
    "stage_load_ms,stage_cost_ms,stage_distance_ms,stage_aggregate_ms";

/// Plotdata prints correlations with this many decimals, the precision of
/// published runtime/quality frontier plots; x keeps the shortest form.
inline constexpr int kPlotCorrelationDecimals = 4;

struct ReportEntry {
  BenchmarkRecord record;
  std::optional<double> pearson;
  std::string label;  // plot label; metric_id when empty
};

/// csv: kCsvHeader plus one row per entry.
/// markdown: the same columns plus pearson_r as a table.
/// plotdata: "x\ty\tlabel" header, then ms_per_segment, pearson_r and label
///           for each entry that has a correlation.
/// Numbers use the shortest round-trip decimal form.
std::string emit_report(std::span<const ReportEntry> entries, ReportFormat format);

// Runtime-vs-length scaling of the three distances on random documents.
struct ScalingPoint {
  std::size_t tokens = 0;
  double wcd_ms = 0.0;
  double rwmd_ms = 0.0;
  double wmd_ms = 0.0;
};

struct ScalingStudy {
  std::vector<ScalingPoint> points;
  double wcd_slope = 0.0;
  double rwmd_slope = 0.0;
  double wmd_slope = 0.0;
};

ScalingStudy scaling_study(std::span<const std::size_t> token_counts, std::size_t dim,
                           std::uint64_t seed);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> xs, std::span<const double> ys);

}  // namespace effeval::bench
