#include "effeval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>

#include "effeval/error.hpp"

namespace effeval::stats {
namespace {

// Ties counted as t(t-1)/2 over runs of equal values in a sorted sequence.
template <typename Eq>
std::uint64_t tied_pairs(const std::vector<std::size_t>& order, Eq eq) {
  std::uint64_t ties = 0;
  std::uint64_t run = 1;
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (eq(order[k - 1], order[k])) {
      ++run;
    } else {
      ties += run * (run - 1) / 2;
      run = 1;
    }
  }
  return ties + run * (run - 1) / 2;
}

// Bottom-up merge sort of `idx` by `key`, returning the number of swaps,
// i.e. the number of discordant pairs relative to the current order.
std::uint64_t merge_sort_swaps(std::vector<std::size_t>& idx, std::span<const double> key) {
  const std::size_t n = idx.size();
  std::vector<std::size_t> buf(n);
  std::uint64_t swaps = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n);
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t i = lo;
      std::size_t j = mid;
      std::size_t k = lo;
      while (i < mid && j < hi) {
        if (key[idx[j]] < key[idx[i]]) {
          swaps += mid - i;
          buf[k++] = idx[j++];
        } else {
          buf[k++] = idx[i++];
        }
      }
      while (i < mid) buf[k++] = idx[i++];
      while (j < hi) buf[k++] = idx[j++];
    }
    idx.swap(buf);
  }
  return swaps;
}

}  // namespace

void validate_sample(const PairedSample& s) {
  if (s.metric_values.size() != s.human_scores.size()) {
    raise(ErrorCode::kDimensionMismatch, "paired sample lengths differ");
  }
  if (s.metric_values.size() < 2) raise(ErrorCode::kPrecondition, "correlation needs n >= 2");
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(s.metric_values.begin(), s.metric_values.end(), finite) ||
      !std::all_of(s.human_scores.begin(), s.human_scores.end(), finite)) {
    raise(ErrorCode::kNonFiniteValue, "paired sample contains NaN or Inf");
  }
}

double pearson_r(const PairedSample& s) {
  validate_sample(s);
  const auto& x = s.metric_values;
  const auto& y = s.human_scores;
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) raise(ErrorCode::kZeroVariance, "pearson_r of a constant sequence");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

double kendall_tau(const PairedSample& s) {
  validate_sample(s);
  const auto& x = s.metric_values;
  const auto& y = s.human_scores;
  const std::size_t n = x.size();

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  const std::uint64_t pairs = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t x_ties = tied_pairs(idx, [&](std::size_t a, std::size_t b) { return x[a] == x[b]; });
  const std::uint64_t joint_ties =
      tied_pairs(idx, [&](std::size_t a, std::size_t b) { return x[a] == x[b] && y[a] == y[b]; });
  const std::uint64_t swaps = merge_sort_swaps(idx, y);
  const std::uint64_t y_ties = tied_pairs(idx, [&](std::size_t a, std::size_t b) { return y[a] == y[b]; });

  if (x_ties == pairs || y_ties == pairs) {
    raise(ErrorCode::kZeroVariance, "kendall_tau with one side entirely tied");
  }
  // concordant - discordant over pairs untied on both sides
  const double numerator = static_cast<double>(pairs) - static_cast<double>(x_ties) -
                           static_cast<double>(y_ties) + static_cast<double>(joint_ties) -
                           2.0 * static_cast<double>(swaps);
  const double denom = std::sqrt(static_cast<long double>(pairs - x_ties) *
                                 static_cast<long double>(pairs - y_ties));
  return std::clamp(numerator / denom, -1.0, 1.0);
}

CorrelationReport correlate(std::span<const double> metric_values,
                            std::span<const double> human_scores,
                            std::span<const std::string> groups, Aggregation mode) {
  if (metric_values.size() != human_scores.size() || metric_values.size() != groups.size()) {
    raise(ErrorCode::kDimensionMismatch, "metric, human and group sequences differ in length");
  }
  std::map<std::string, std::vector<std::size_t>> members;
  if (mode == Aggregation::kPooled) {
    auto& all = members["pooled"];
    all.resize(metric_values.size());
    std::iota(all.begin(), all.end(), 0);
  } else {
    for (std::size_t i = 0; i < groups.size(); ++i) members[groups[i]].push_back(i);
  }

  CorrelationReport report;
  report.mode = mode;
  double pearson_sum = 0.0;
  double kendall_sum = 0.0;
  std::size_t pearson_count = 0;
  std::size_t kendall_count = 0;
  for (const auto& [name, rows] : members) {
    GroupCorrelation g;
    g.group = name;
    g.n = rows.size();
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t i : rows) {
      xs.push_back(metric_values[i]);
      ys.push_back(human_scores[i]);
    }
    const PairedSample sample{xs, ys};
    try {
      g.pearson = pearson_r(sample);
      pearson_sum += *g.pearson;
      ++pearson_count;
    } catch (const Error& e) {
      g.error = e.what();
    }
    try {
      g.kendall = kendall_tau(sample);
      kendall_sum += *g.kendall;
      ++kendall_count;
    } catch (const Error& e) {
      if (g.error.empty()) g.error = e.what();
    }
    report.groups.push_back(std::move(g));
  }
  if (pearson_count > 0) report.pearson = pearson_sum / static_cast<double>(pearson_count);
  if (kendall_count > 0) report.kendall = kendall_sum / static_cast<double>(kendall_count);
  return report;
}

}  // namespace effeval::stats
