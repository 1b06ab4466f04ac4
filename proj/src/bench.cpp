#include "effeval/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "effeval/error.hpp"
#include "effeval/stats.hpp"
#include "effeval/synthetic.hpp"
#include "effeval/transport.hpp"
#include "text_util.hpp"

namespace effeval::bench {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string md_field(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

std::string label_of(const ReportEntry& e) {
  return e.label.empty() ? e.record.metric_id : e.label;
}

std::string peak_text(const BenchmarkRecord& r) {
  return r.peak_bytes ? std::to_string(*r.peak_bytes) : std::string();
}

// Per-call time of `fn`, repeating it until one trial spans a few
// milliseconds and keeping the fastest of several trials.
template <typename Fn>
double time_per_call_ms(Fn&& fn) {
  constexpr double kTrialMs = 5.0;
  constexpr int kTrials = 3;
  std::size_t reps = 1;
  while (true) {
    const auto start = Clock::now();
    for (std::size_t r = 0; r < reps; ++r) fn();
    if (elapsed_ms(start) >= kTrialMs || reps >= (1u << 24)) break;
    reps *= 2;
  }
  double best = std::numeric_limits<double>::infinity();
  for (int t = 0; t < kTrials; ++t) {
    const auto start = Clock::now();
    for (std::size_t r = 0; r < reps; ++r) fn();
    best = std::min(best, elapsed_ms(start) / static_cast<double>(reps));
  }
  return best;
}

volatile double g_sink = 0.0;

}  // namespace

std::string_view stage_name(Stage stage) noexcept {
  switch (stage) {
    case Stage::kLoadEmbeddings: return "load_embeddings";
    case Stage::kCostMatrix: return "cost_matrix";
    case Stage::kDistance: return "distance";
    case Stage::kAggregate: return "aggregate";
  }
  return "unknown";
}

double StageTimings::total() const noexcept { return std::accumulate(ms.begin(), ms.end(), 0.0); }

StageRecorder::Scope::Scope(StageRecorder& owner, Stage stage) noexcept
    : owner_(owner), stage_(stage), start_(Clock::now()) {}

StageRecorder::Scope::~Scope() { owner_.add(stage_, elapsed_ms(start_)); }

std::uint64_t peak_memory_probe(const std::function<void()>& run) {
  if (!tracker_installed()) {
    raise(ErrorCode::kProbeUnavailable, "allocation hook is not linked into this executable");
  }
  // Keep an enclosing probe's high-water mark intact.
  const std::uint64_t outer_peak = tracker_peak_bytes();
  struct Restore {
    std::uint64_t peak;
    ~Restore() { tracker_merge_peak(peak); }
  } restore{outer_peak};
  const std::uint64_t base = tracker_current_bytes();
  tracker_reset_peak();
  run();
  const std::uint64_t peak = tracker_peak_bytes();
  return peak > base ? peak - base : 0;
}

std::uint64_t config_fingerprint(const BenchmarkConfig& c) {
  // FNV-1a, 64 bit
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::string_view s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ull;
    }
    h ^= 0x1f;
    h *= 0x100000001b3ull;
  };
  mix(c.metric_id);
  mix(c.dataset_id);
  mix(std::to_string(c.runs));
  mix(std::to_string(c.batch_size));
  mix(c.extra);
  return h;
}

double ms_per_segment(std::span<const double> run_seconds, std::size_t segment_count) {
  if (run_seconds.empty() || segment_count == 0) {
    raise(ErrorCode::kPrecondition, "ms_per_segment needs runs and segments");
  }
  const double mean =
      std::accumulate(run_seconds.begin(), run_seconds.end(), 0.0) / static_cast<double>(run_seconds.size());
  return mean * 1000.0 / static_cast<double>(segment_count);
}

BenchmarkRecord time_metric(const RunFn& run, std::size_t segment_count,
                            const BenchmarkConfig& config) {
  if (config.runs < kMinRuns) {
    raise(ErrorCode::kPrecondition, "benchmarks need at least " + std::to_string(kMinRuns) +
                                        " runs, got " + std::to_string(config.runs));
  }
  if (segment_count == 0) raise(ErrorCode::kPrecondition, "benchmark dataset is empty");
  if (config.batch_size == 0) raise(ErrorCode::kPrecondition, "batch size must be >= 1");

  BenchmarkRecord rec;
  rec.metric_id = config.metric_id;
  rec.dataset_id = config.dataset_id;
  rec.batch_size = config.batch_size;
  rec.segment_count = segment_count;
  rec.fingerprint = config_fingerprint(config);

  if (config.warmup) {
    StageRecorder discard;
    run(discard);
  }
  const bool probe = config.probe_memory && tracker_installed();
  std::uint64_t peak = 0;
  for (std::size_t r = 0; r < config.runs; ++r) {
    StageRecorder stages;
    double seconds = 0.0;
    auto body = [&] {
      const auto start = Clock::now();
      run(stages);
      seconds = std::chrono::duration<double>(Clock::now() - start).count();
    };
    if (probe) {
      peak = std::max(peak, peak_memory_probe(body));
    } else {
      body();
    }
    rec.run_seconds.push_back(seconds);
    for (std::size_t s = 0; s < kStageCount; ++s) rec.stages.ms[s] += stages.timings().ms[s];
  }
  for (auto& ms : rec.stages.ms) ms /= static_cast<double>(config.runs);
  rec.ms_per_segment = ms_per_segment(rec.run_seconds, segment_count);
  if (probe) rec.peak_bytes = peak;
  return rec;
}

std::vector<SweepRow> sweep_batch_size(const BatchedMetric& metric, std::size_t segment_count,
                                       std::span<const std::size_t> sizes,
                                       const BenchmarkConfig& base,
                                       std::span<const double> human_scores) {
  if (sizes.empty()) raise(ErrorCode::kPrecondition, "batch sweep needs at least one size");
  if (!human_scores.empty() && human_scores.size() != segment_count) {
    raise(ErrorCode::kDimensionMismatch, "human scores do not match the segment count");
  }
  StageRecorder scratch;
  const auto reference = metric(1, scratch);
  if (reference.size() != segment_count) {
    raise(ErrorCode::kInternal, "metric returned " + std::to_string(reference.size()) +
                                    " values for " + std::to_string(segment_count) + " segments");
  }

  std::vector<SweepRow> rows;
  for (std::size_t size : sizes) {
    BenchmarkConfig config = base;
    config.batch_size = size;
    SweepRow row;
    row.record = time_metric([&](StageRecorder& rec) { row.values = metric(size, rec); },
                             segment_count, config);
    if (row.values.size() != reference.size()) {
      raise(ErrorCode::kBatchVariance, "batch size " + std::to_string(size) + " changed the segment count");
    }
    for (std::size_t i = 0; i < reference.size(); ++i) {
      row.max_deviation = std::max(row.max_deviation, std::abs(row.values[i] - reference[i]));
    }
    if (!(row.max_deviation <= kBatchTolerance)) {
      std::ostringstream msg;
      msg << "batch size " << size << " moved a score by " << row.max_deviation;
      raise(ErrorCode::kBatchVariance, msg.str());
    }
    if (!human_scores.empty()) {
      try {
        row.pearson = stats::pearson_r({row.values, human_scores});
      } catch (const Error&) {
        row.pearson.reset();
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

double carbon_estimate(double runtime_hours, const CarbonAssumptions& a) {
  if (!std::isfinite(runtime_hours) || runtime_hours < 0.0) {
    raise(ErrorCode::kNonPositive, "runtime hours must be finite and >= 0");
  }
  if (!std::isfinite(a.power_watts) || !(a.power_watts > 0.0)) {
    raise(ErrorCode::kNonPositive, "power draw must be finite and > 0");
  }
  if (!std::isfinite(a.grid_intensity_kg_per_kwh) || !(a.grid_intensity_kg_per_kwh > 0.0)) {
    raise(ErrorCode::kNonPositive, "grid intensity must be finite and > 0");
  }
  return runtime_hours * (a.power_watts / 1000.0) * a.grid_intensity_kg_per_kwh;
}

std::optional<ReportFormat> parse_report_format(std::string_view name) noexcept {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "markdown") return ReportFormat::kMarkdown;
  if (name == "plotdata") return ReportFormat::kPlotData;
  return std::nullopt;
}

std::string emit_report(std::span<const ReportEntry> entries, ReportFormat format) {
  using detail::format_real;
  std::string out;
  switch (format) {
    case ReportFormat::kCsv:
      out += kCsvHeader;
      out += '\n';
      for (const auto& e : entries) {
        const auto& r = e.record;
        out += csv_field(r.metric_id) + ',' + csv_field(r.dataset_id) + ',' +
               std::to_string(r.batch_size) + ',' + std::to_string(r.runs()) + ',' +
               format_real(r.ms_per_segment) + ',' + peak_text(r);
        for (double ms : r.stages.ms) out += ',' + format_real(ms);
        out += '\n';
      }
      break;
    case ReportFormat::kMarkdown:
      out += "| metric | dataset | batch | runs | ms/segment | peak bytes | load ms | cost ms | "
             "distance ms | aggregate ms | pearson r |\n";
      out += "|---|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n";
      for (const auto& e : entries) {
        const auto& r = e.record;
        out += "| " + md_field(label_of(e)) + " | " + md_field(r.dataset_id) + " | " +
               std::to_string(r.batch_size) + " | " + std::to_string(r.runs()) + " | " +
               format_real(r.ms_per_segment) + " | " + peak_text(r) + " |";
        for (double ms : r.stages.ms) out += ' ' + format_real(ms) + " |";
        out += ' ' + (e.pearson ? format_real(*e.pearson) : std::string()) + " |\n";
      }
      break;
    case ReportFormat::kPlotData:
      out += "x\ty\tlabel\n";
      for (const auto& e : entries) {
        if (!e.pearson) continue;
        std::string label = label_of(e);
        std::replace(label.begin(), label.end(), '\t', ' ');
        std::replace(label.begin(), label.end(), '\n', ' ');
        char y[32];
        std::snprintf(y, sizeof(y), "%.*f", kPlotCorrelationDecimals, *e.pearson);
        out += format_real(e.record.ms_per_segment) + '\t' + y + '\t' + label + '\n';
      }
      break;
  }
  return out;
}

double loglog_slope(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    raise(ErrorCode::kPrecondition, "slope fit needs two or more paired points");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  std::vector<double> lx(xs.size());
  std::vector<double> ly(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) raise(ErrorCode::kNonPositive, "log-log fit needs positive values");
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) raise(ErrorCode::kZeroVariance, "slope fit needs distinct x values");
  return sxy / sxx;
}

ScalingStudy scaling_study(std::span<const std::size_t> token_counts, std::size_t dim,
                           std::uint64_t seed) {
  synthetic::Rng rng(seed);
  ScalingStudy study;
  std::vector<double> xs;
  std::vector<double> wcd_ms;
  std::vector<double> rwmd_ms;
  std::vector<double> wmd_ms;
  for (std::size_t n : token_counts) {
    const auto a = synthetic::random_document(rng, n, dim, false);
    const auto b = synthetic::random_document(rng, n, dim, false);
    ScalingPoint p;
    p.tokens = n;
    p.wcd_ms = time_per_call_ms([&] { g_sink = g_sink + transport::wcd(a, b); });
    p.rwmd_ms = time_per_call_ms([&] { g_sink = g_sink + transport::rwmd(a, b); });
    p.wmd_ms = time_per_call_ms([&] { g_sink = g_sink + transport::wmd(a, b).distance; });
    study.points.push_back(p);
    xs.push_back(static_cast<double>(n));
    wcd_ms.push_back(p.wcd_ms);
    rwmd_ms.push_back(p.rwmd_ms);
    wmd_ms.push_back(p.wmd_ms);
  }
  if (xs.size() >= 2) {
    study.wcd_slope = loglog_slope(xs, wcd_ms);
    study.rwmd_slope = loglog_slope(xs, rwmd_ms);
    study.wmd_slope = loglog_slope(xs, wmd_ms);
  }
  return study;
}

}  // namespace effeval::bench
