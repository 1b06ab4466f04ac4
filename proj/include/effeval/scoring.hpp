#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "effeval/bench.hpp"
#include "effeval/metrics.hpp"
#include "effeval/stats.hpp"
#include "effeval/transport.hpp"

namespace effeval::scoring {

enum class MetricKind { kGreedy, kMover, kXMover, kSentSim };

std::string_view metric_name(MetricKind kind) noexcept;
std::optional<MetricKind> parse_metric(std::string_view name) noexcept;

struct Options {
  MetricKind metric = MetricKind::kGreedy;
  metrics::Approximation variant = metrics::Approximation::kWmd;
  transport::Measure measure = transport::Measure::kEuclidean;  // xmover only
  std::size_t batch_size = 1;
  std::size_t jobs = 1;
  double w_dist = 1.0;
  double w_lm = 0.1;
  std::optional<double> sentsim_alpha;  // weighted combination when set, else the mean
};

/// Input files; which ones are required depends on the metric:
///   greedy   hyp, ref (idf optional: IDF token weights instead of uniform)
///   mover    hyp, ref, idf
///   xmover   src, hyp (remap, lm optional)
///   sentsim  src, hyp (remap optional; src_sent/hyp_sent hold one row per
///            segment, otherwise token rows are mean-pooled)
/// A segments file, when given, must have one record per container segment.
struct Inputs {
  std::optional<std::filesystem::path> segments;
  std::optional<std::filesystem::path> hyp;
  std::optional<std::filesystem::path> ref;
  std::optional<std::filesystem::path> src;
  std::optional<std::filesystem::path> src_sent;
  std::optional<std::filesystem::path> hyp_sent;
  std::optional<std::filesystem::path> idf;
  std::optional<std::filesystem::path> remap;
  std::optional<std::filesystem::path> lm;
};

/// Names of the inputs the metric cannot run without, e.g. "hyp".
std::vector<std::string> missing_inputs(const Inputs& inputs, MetricKind metric);

struct Result {
  std::string metric_id;
  std::vector<std::string> keys;
  std::vector<double> values;
};

/// Streams the containers `batch_size` segments at a time and scores each
/// segment; with jobs > 1 the segments of a batch are split across threads.
/// Errors carry the failing file or segment key.
Result score(const Inputs& inputs, const Options& options, bench::StageRecorder* stages = nullptr);

/// "key\tvalue\n" per segment, values with 17 significant digits.
std::string render_scores(const Result& result);

/// Parses the output of render_scores.
Result read_scores(const std::filesystem::path& path);

/// Correlates scores with the human judgments of a segments file. Keys must
/// be the record ordinals of that file; records without a human score are
/// left out. Groups are language pairs.
stats::CorrelationReport correlate_scores(const std::filesystem::path& segments,
                                          const Result& scores, stats::Aggregation mode);

}  // namespace effeval::scoring
