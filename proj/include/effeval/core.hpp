#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "effeval/error.hpp"

namespace effeval {

/// Token embeddings of one segment, row-major `rows x dim`.
///
/// Every value is finite and `dim >= 1`; a matrix may have zero rows (an
/// empty segment), which is only rejected once it is turned into a document.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<const double> row(std::size_t i) const noexcept {
    return {values_.data() + i * dim_, dim_};
  }

  /// Copy holding only the listed rows, in the given order.
  EmbeddingMatrix select_rows(std::span<const std::size_t> keep) const;

  /// Every value multiplied by `factor`.
  EmbeddingMatrix scaled(double factor) const;

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 1;
  std::vector<double> values_;
};

/// A bag of embedded tokens carrying a mass distribution.
struct WeightedDocument {
  std::vector<std::string> tokens;
  std::vector<double> weights;
  EmbeddingMatrix embedding;

  friend bool operator==(const WeightedDocument&, const WeightedDocument&) = default;
};

/// Uniform weights over every row of `embedding`.
WeightedDocument uniform_document(std::vector<std::string> tokens, EmbeddingMatrix embedding);

/// Drops zero-weight tokens (and their rows) and renormalizes the remaining
/// weights to sum to one.
///
/// Throws kEmptyDocument when no positive mass remains, kDimensionMismatch
/// when tokens, weights and rows disagree, kNonFiniteValue on NaN/Inf weights
/// and kInvalidArgument on negative weights.
WeightedDocument validate_document(const WeightedDocument& doc);

/// Cheap check used by the transport routines: sizes agree, weights are
/// positive and sum to one within 1e-9.
void require_normalized(const WeightedDocument& doc);

struct SegmentRecord {
  std::string lang_pair;
  std::string system_id;
  std::string source;
  std::string hypothesis;
  std::optional<std::string> reference;
  std::optional<double> human_score;

  friend bool operator==(const SegmentRecord&, const SegmentRecord&) = default;
};

/// True for "xx-yy" where both halves are 2-3 lowercase ASCII letters.
bool is_valid_lang_pair(std::string_view lang_pair) noexcept;

struct MetricScore {
  std::string metric_id;
  double value = 0.0;
  std::vector<std::pair<std::string, double>> subvalues;

  std::optional<double> subvalue(std::string_view name) const;
};

}  // namespace effeval
