#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace effeval::stats {

/// Metric outputs paired with human judgments. Lengths must agree, n >= 2,
/// all values finite.
struct PairedSample {
  std::span<const double> metric_values;
  std::span<const double> human_scores;
};

void validate_sample(const PairedSample& s);

/// Product-moment correlation from mean-centered two-pass sums.
/// Throws kZeroVariance when either side is constant.
double pearson_r(const PairedSample& s);

/// Kendall tau-b (tie-corrected), Knight's O(n log n) algorithm.
/// Throws kZeroVariance when either side is entirely tied.
double kendall_tau(const PairedSample& s);

enum class Aggregation { kPooled, kPerLanguage };

struct GroupCorrelation {
  std::string group;
  std::size_t n = 0;
  std::optional<double> pearson;
  std::optional<double> kendall;
  std::string error;  // empty when both statistics were computed
};

struct CorrelationReport {
  Aggregation mode = Aggregation::kPooled;
  std::vector<GroupCorrelation> groups;
  // Pooled: the single group's values. Per-language: the mean over groups
  // that produced a value.
  std::optional<double> pearson;
  std::optional<double> kendall;
};

/// Correlates metric values with human scores either over all segments at
/// once or per group (language pair) followed by averaging. A group that
/// fails (fewer than two segments, zero variance) is reported with its error
/// and the remaining groups continue.
CorrelationReport correlate(std::span<const double> metric_values,
                            std::span<const double> human_scores,
                            std::span<const std::string> groups, Aggregation mode);

}  // namespace effeval::stats
