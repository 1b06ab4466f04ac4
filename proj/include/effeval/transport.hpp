#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "effeval/core.hpp"

namespace effeval::transport {

enum class Measure { kEuclidean, kCosineDistance };

/// Pairwise ground costs between the rows of two embedding matrices.
class CostMatrix {
 public:
  CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> values, Measure measure);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  Measure measure() const noexcept { return measure_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * cols_ + j]; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> values_;
  Measure measure_;
};

/// Euclidean distance or cosine distance (1 - cosine similarity, clamped at
/// zero) between every row of `a` and every row of `b`.
///
/// Throws kDimensionMismatch, kEmptyDocument for empty inputs, and
/// kZeroVector when a cosine distance touches an all-zero row.
CostMatrix cost_matrix(const EmbeddingMatrix& a, const EmbeddingMatrix& b, Measure measure);

double euclidean_distance(std::span<const double> x, std::span<const double> y) noexcept;

struct Flow {
  std::size_t source;
  std::size_t target;
  double mass;
};

struct TransportPlan {
  std::vector<Flow> flows;
  double objective = 0.0;
};

struct WmdResult {
  double distance = 0.0;
  TransportPlan plan;
  std::size_t pivots = 0;
};

/// Exact balanced transportation problem
///   min sum T_ij c_ij  s.t.  T 1 = supply, T^T 1 = demand, T >= 0
/// solved by a primal network simplex over strongly feasible spanning trees.
///
/// Both mass vectors must be positive and sum to one. The result is audited
/// (marginals, dual feasibility, objective) and kSolverFailure is thrown when
/// the optimality certificate cannot be established.
WmdResult solve_transport(std::span<const double> supply, std::span<const double> demand,
                          const CostMatrix& cost);

/// Word Mover's Distance between two validated documents.
WmdResult wmd(const WeightedDocument& a, const WeightedDocument& b,
              Measure measure = Measure::kEuclidean);

/// Relaxed WMD: max of the two one-sided nearest-neighbour relaxations.
double rwmd(std::span<const double> supply, std::span<const double> demand, const CostMatrix& cost);
double rwmd(const WeightedDocument& a, const WeightedDocument& b,
            Measure measure = Measure::kEuclidean);

/// Euclidean distance between the weight-weighted embedding centroids.
double wcd(const WeightedDocument& a, const WeightedDocument& b);

/// Weighted mean of the embedding rows.
std::vector<double> centroid(const WeightedDocument& doc);

}  // namespace effeval::transport
