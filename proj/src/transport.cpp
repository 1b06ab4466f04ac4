#include "effeval/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "network_simplex.hpp"

namespace effeval::transport {
namespace {

constexpr double kPivotEps = 1e-12;
constexpr double kAuditTol = 1e-9;

double dot(std::span<const double> x, std::span<const double> y) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
  return s;
}

void require_masses(std::span<const double> mass, const char* side) {
  if (mass.empty()) raise(ErrorCode::kEmptyDocument, std::string(side) + " has no mass");
  double total = 0.0;
  for (double w : mass) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      raise(ErrorCode::kPrecondition, std::string(side) + " mass must be positive and finite");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > kAuditTol) {
    raise(ErrorCode::kPrecondition, std::string(side) + " mass must sum to 1");
  }
}

void require_shape(std::span<const double> supply, std::span<const double> demand,
                   const CostMatrix& cost) {
  if (cost.rows() != supply.size() || cost.cols() != demand.size()) {
    raise(ErrorCode::kDimensionMismatch, "cost matrix shape does not match the masses");
  }
}

}  // namespace

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                       Measure measure)
    : rows_(rows), cols_(cols), values_(std::move(values)), measure_(measure) {
  if (values_.size() != rows_ * cols_) {
    raise(ErrorCode::kDimensionMismatch, "cost matrix value count does not match its shape");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) raise(ErrorCode::kNonFiniteValue, "cost matrix entry is NaN or Inf");
    if (v < 0.0) raise(ErrorCode::kInvalidArgument, "cost matrix entry is negative");
  }
}

double euclidean_distance(std::span<const double> x, std::span<const double> y) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - y[k];
    s += d * d;
  }
  return std::sqrt(s);
}

CostMatrix cost_matrix(const EmbeddingMatrix& a, const EmbeddingMatrix& b, Measure measure) {
  if (a.dim() != b.dim()) {
    raise(ErrorCode::kDimensionMismatch, "embedding dims differ: " + std::to_string(a.dim()) +
                                             " vs " + std::to_string(b.dim()));
  }
  if (a.rows() == 0 || b.rows() == 0) {
    raise(ErrorCode::kEmptyDocument, "cost matrix needs at least one row on each side");
  }
  const std::size_t n = a.rows();
  const std::size_t m = b.rows();
  std::vector<double> values(n * m);

  if (measure == Measure::kEuclidean) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = a.row(i);
      for (std::size_t j = 0; j < m; ++j) values[i * m + j] = euclidean_distance(x, b.row(j));
    }
  } else {
    std::vector<double> norm_a(n);
    std::vector<double> norm_b(m);
    for (std::size_t i = 0; i < n; ++i) norm_a[i] = std::sqrt(dot(a.row(i), a.row(i)));
    for (std::size_t j = 0; j < m; ++j) norm_b[j] = std::sqrt(dot(b.row(j), b.row(j)));
    if (std::find(norm_a.begin(), norm_a.end(), 0.0) != norm_a.end() ||
        std::find(norm_b.begin(), norm_b.end(), 0.0) != norm_b.end()) {
      raise(ErrorCode::kZeroVector, "cosine distance is undefined for an all-zero row");
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const double sim = dot(a.row(i), b.row(j)) / (norm_a[i] * norm_b[j]);
        values[i * m + j] = std::max(0.0, 1.0 - sim);
      }
    }
  }
  return CostMatrix(n, m, std::move(values), measure);
}

WmdResult solve_transport(std::span<const double> supply, std::span<const double> demand,
                          const CostMatrix& cost) {
  require_masses(supply, "supply");
  require_masses(demand, "demand");
  require_shape(supply, demand, cost);

  const std::size_t n = supply.size();
  const std::size_t m = demand.size();
  const auto raw = cost.values();
  const double max_cost = *std::max_element(raw.begin(), raw.end());
  const double scale = max_cost > 0.0 ? 1.0 / max_cost : 1.0;
  std::vector<double> scaled(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) scaled[k] = raw[k] * scale;

  const std::size_t max_pivots = 50 * n * m + 10 * (n + m) + 1000;
  auto outcome = detail::network_simplex(supply, demand, scaled, kPivotEps, max_pivots);

  auto fail = [&](const std::string& why) {
    std::ostringstream msg;
    msg << "network simplex on " << n << "x" << m << " instance: " << why << " (after "
        << outcome.pivots << " pivots)";
    raise(ErrorCode::kSolverFailure, msg.str());
  };
  if (!outcome.converged) fail("no optimal basis within the pivot limit");
  if (outcome.min_reduced_cost < -kAuditTol) fail("dual infeasible at termination");
  for (double f : outcome.artificial) {
    if (f > kAuditTol) fail("artificial arcs still carry flow");
  }

  WmdResult result;
  result.pivots = outcome.pivots;
  std::vector<double> row_sum(n, 0.0);
  std::vector<double> col_sum(m, 0.0);
  double objective = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double mass = outcome.flow[i * m + j];
      if (mass < 0.0) fail("negative flow");
      if (mass == 0.0) continue;
      result.plan.flows.push_back({i, j, mass});
      row_sum[i] += mass;
      col_sum[j] += mass;
      objective += mass * cost(i, j);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(row_sum[i] - supply[i]) > kAuditTol) fail("row marginal violated");
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (std::abs(col_sum[j] - demand[j]) > kAuditTol) fail("column marginal violated");
  }
  result.plan.objective = objective;
  result.distance = objective;
  return result;
}

WmdResult wmd(const WeightedDocument& a, const WeightedDocument& b, Measure measure) {
  require_normalized(a);
  require_normalized(b);
  const auto cost = cost_matrix(a.embedding, b.embedding, measure);
  return solve_transport(a.weights, b.weights, cost);
}

double rwmd(std::span<const double> supply, std::span<const double> demand, const CostMatrix& cost) {
  require_shape(supply, demand, cost);
  const std::size_t n = supply.size();
  const std::size_t m = demand.size();
  if (n == 0 || m == 0) raise(ErrorCode::kEmptyDocument, "rwmd needs nonempty documents");

  std::vector<double> col_min(m, std::numeric_limits<double>::infinity());
  double forward = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
      const double c = cost(i, j);
      row_min = std::min(row_min, c);
      col_min[j] = std::min(col_min[j], c);
    }
    forward += supply[i] * row_min;
  }
  double backward = 0.0;
  for (std::size_t j = 0; j < m; ++j) backward += demand[j] * col_min[j];
  return std::max(forward, backward);
}

double rwmd(const WeightedDocument& a, const WeightedDocument& b, Measure measure) {
  require_normalized(a);
  require_normalized(b);
  const auto cost = cost_matrix(a.embedding, b.embedding, measure);
  return rwmd(a.weights, b.weights, cost);
}

std::vector<double> centroid(const WeightedDocument& doc) {
  const std::size_t dim = doc.embedding.dim();
  std::vector<double> c(dim, 0.0);
  for (std::size_t i = 0; i < doc.weights.size(); ++i) {
    const auto row = doc.embedding.row(i);
    const double w = doc.weights[i];
    for (std::size_t k = 0; k < dim; ++k) c[k] += w * row[k];
  }
  return c;
}

double wcd(const WeightedDocument& a, const WeightedDocument& b) {
  require_normalized(a);
  require_normalized(b);
  if (a.embedding.dim() != b.embedding.dim()) {
    raise(ErrorCode::kDimensionMismatch, "embedding dims differ");
  }
  const auto ca = centroid(a);
  const auto cb = centroid(b);
  return euclidean_distance(ca, cb);
}

}  // namespace effeval::transport
