#include "effeval/core.hpp"

#include <cmath>
#include <numeric>

namespace effeval {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kOk: return "Ok";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kEmptyDocument: return "EmptyDocument";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kSolverFailure: return "SolverFailure";
    case ErrorCode::kZeroVariance: return "ZeroVariance";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kCrcMismatch: return "CrcMismatch";
    case ErrorCode::kTruncatedPayload: return "TruncatedPayload";
    case ErrorCode::kVersionUnsupported: return "VersionUnsupported";
    case ErrorCode::kLayoutMismatch: return "LayoutMismatch";
    case ErrorCode::kColumnCount: return "ColumnCount";
    case ErrorCode::kBadScore: return "BadScore";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kMissingPenalty: return "MissingPenalty";
    case ErrorCode::kAlignmentMismatch: return "AlignmentMismatch";
    case ErrorCode::kProbeUnavailable: return "ProbeUnavailable";
    case ErrorCode::kNonPositive: return "NonPositive";
    case ErrorCode::kPrecondition: return "PreconditionViolated";
    case ErrorCode::kBatchVariance: return "BatchVariance";
    case ErrorCode::kInternal: return "InternalError";
  }
  return "Unknown";
}

void raise(ErrorCode code, const std::string& message) {
  throw Error(code, std::string(error_code_name(code)) + ": " + message);
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<double> values)
    : rows_(rows), dim_(dim), values_(std::move(values)) {
  if (dim_ == 0) raise(ErrorCode::kInvalidArgument, "embedding dim must be >= 1");
  if (values_.size() != rows_ * dim_) {
    raise(ErrorCode::kDimensionMismatch,
          "embedding has " + std::to_string(values_.size()) + " values, expected " +
              std::to_string(rows_) + "x" + std::to_string(dim_));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) raise(ErrorCode::kNonFiniteValue, "embedding contains NaN or Inf");
  }
}

EmbeddingMatrix EmbeddingMatrix::select_rows(std::span<const std::size_t> keep) const {
  std::vector<double> out;
  out.reserve(keep.size() * dim_);
  for (std::size_t r : keep) {
    auto src = row(r);
    out.insert(out.end(), src.begin(), src.end());
  }
  return EmbeddingMatrix(keep.size(), dim_, std::move(out));
}

EmbeddingMatrix EmbeddingMatrix::scaled(double factor) const {
  std::vector<double> out(values_);
  for (double& v : out) v *= factor;
  return EmbeddingMatrix(rows_, dim_, std::move(out));
}

WeightedDocument uniform_document(std::vector<std::string> tokens, EmbeddingMatrix embedding) {
  std::vector<double> weights(embedding.rows(), 1.0);
  return validate_document({std::move(tokens), std::move(weights), std::move(embedding)});
}

WeightedDocument validate_document(const WeightedDocument& doc) {
  if (doc.tokens.size() != doc.weights.size() || doc.tokens.size() != doc.embedding.rows()) {
    raise(ErrorCode::kDimensionMismatch,
          "document has " + std::to_string(doc.tokens.size()) + " tokens, " +
              std::to_string(doc.weights.size()) + " weights and " +
              std::to_string(doc.embedding.rows()) + " embedding rows");
  }
  std::vector<std::size_t> keep;
  keep.reserve(doc.weights.size());
  for (std::size_t i = 0; i < doc.weights.size(); ++i) {
    const double w = doc.weights[i];
    if (!std::isfinite(w)) raise(ErrorCode::kNonFiniteValue, "document weight is NaN or Inf");
    if (w < 0.0) raise(ErrorCode::kInvalidArgument, "document weight is negative");
    if (w > 0.0) keep.push_back(i);
  }
  if (keep.empty()) raise(ErrorCode::kEmptyDocument, "no token with positive weight");

  double total = 0.0;
  for (std::size_t i : keep) total += doc.weights[i];
  // Already-normalized input is kept bit-for-bit so that validation is idempotent.
  const bool normalized = std::abs(total - 1.0) <= 1e-12;

  WeightedDocument out;
  out.tokens.reserve(keep.size());
  out.weights.reserve(keep.size());
  for (std::size_t i : keep) {
    out.tokens.push_back(doc.tokens[i]);
    out.weights.push_back(normalized ? doc.weights[i] : doc.weights[i] / total);
  }
  out.embedding = keep.size() == doc.embedding.rows() ? doc.embedding : doc.embedding.select_rows(keep);
  return out;
}

void require_normalized(const WeightedDocument& doc) {
  const std::size_t n = doc.weights.size();
  if (n == 0) raise(ErrorCode::kEmptyDocument, "document has no tokens");
  if (doc.embedding.rows() != n) {
    raise(ErrorCode::kDimensionMismatch, "document weights and embedding rows disagree");
  }
  double total = 0.0;
  for (double w : doc.weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      raise(ErrorCode::kPrecondition, "document is not validated (non-positive weight)");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    raise(ErrorCode::kPrecondition, "document is not validated (weights do not sum to 1)");
  }
}

bool is_valid_lang_pair(std::string_view lang_pair) noexcept {
  const auto dash = lang_pair.find('-');
  if (dash == std::string_view::npos) return false;
  auto code_ok = [](std::string_view code) {
    if (code.size() < 2 || code.size() > 3) return false;
    for (char c : code) {
      if (c < 'a' || c > 'z') return false;
    }
    return true;
  };
  return code_ok(lang_pair.substr(0, dash)) && code_ok(lang_pair.substr(dash + 1));
}

std::optional<double> MetricScore::subvalue(std::string_view name) const {
  for (const auto& [key, value] : subvalues) {
    if (key == name) return value;
  }
  return std::nullopt;
}

}  // namespace effeval
