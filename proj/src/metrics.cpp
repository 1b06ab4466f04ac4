#include "effeval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace effeval::metrics {
namespace {

double dot(std::span<const double> x, std::span<const double> y) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
  return s;
}

void require_same_dim(const WeightedDocument& a, const WeightedDocument& b) {
  if (a.embedding.dim() != b.embedding.dim()) {
    raise(ErrorCode::kDimensionMismatch, "documents have different embedding dims");
  }
}

WeightedDocument reweight(const WeightedDocument& doc, const IdfTable& idf) {
  WeightedDocument out{doc.tokens, idf_weights(idf, doc.tokens), doc.embedding};
  return validate_document(out);
}

// Recall-direction half of greedy matching: every token of `from` is matched
// to its most similar token of `to`.
double greedy_side(const WeightedDocument& from, std::span<const double> from_norms,
                   const WeightedDocument& to, std::span<const double> to_norms) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < from.weights.size(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < to.weights.size(); ++j) {
      const double sim =
          dot(from.embedding.row(i), to.embedding.row(j)) / (from_norms[i] * to_norms[j]);
      best = std::max(best, sim);
    }
    num += from.weights[i] * best;
    den += from.weights[i];
  }
  return num / den;
}

std::vector<double> row_norms(const EmbeddingMatrix& m) {
  std::vector<double> norms(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    norms[i] = std::sqrt(dot(m.row(i), m.row(i)));
    if (norms[i] == 0.0) raise(ErrorCode::kZeroVector, "embedding row has zero norm");
  }
  return norms;
}

}  // namespace

IdfTable::IdfTable(std::uint64_t doc_count, std::map<std::string, std::uint64_t> df)
    : doc_count_(doc_count), df_(std::move(df)) {
  if (doc_count_ == 0) raise(ErrorCode::kInvalidArgument, "IDF table needs N >= 1");
  for (const auto& [token, count] : df_) {
    if (count > doc_count_) {
      raise(ErrorCode::kInvalidArgument,
            "document frequency of '" + token + "' exceeds the document count");
    }
  }
}

std::uint64_t IdfTable::df(const std::string& token) const {
  const auto it = df_.find(token);
  return it == df_.end() ? 0 : it->second;
}

double IdfTable::idf(const std::string& token) const {
  return std::log(static_cast<double>(doc_count_ + 1) / static_cast<double>(df(token) + 1));
}

std::vector<double> idf_weights(const IdfTable& table, std::span<const std::string> tokens) {
  std::vector<double> weights;
  weights.reserve(tokens.size());
  bool any_positive = false;
  for (const auto& token : tokens) {
    weights.push_back(table.idf(token));
    any_positive = any_positive || weights.back() > 0.0;
  }
  if (!any_positive) std::fill(weights.begin(), weights.end(), 1.0);
  return weights;
}

RemapMatrix::RemapMatrix(std::size_t dim, std::vector<double> projection,
                         std::optional<std::vector<double>> bias)
    : dim_(dim), projection_(std::move(projection)), bias_(std::move(bias)) {
  if (dim_ == 0) raise(ErrorCode::kInvalidArgument, "remap dim must be >= 1");
  if (projection_.size() != dim_ * dim_) {
    raise(ErrorCode::kDimensionMismatch, "remap projection must be dim x dim");
  }
  if (bias_ && bias_->size() != dim_) {
    raise(ErrorCode::kDimensionMismatch, "remap bias must have dim entries");
  }
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(projection_.begin(), projection_.end(), finite) ||
      (bias_ && !std::all_of(bias_->begin(), bias_->end(), finite))) {
    raise(ErrorCode::kNonFiniteValue, "remap matrix contains NaN or Inf");
  }
}

RemapMatrix RemapMatrix::identity(std::size_t dim) {
  std::vector<double> p(dim * dim, 0.0);
  for (std::size_t k = 0; k < dim; ++k) p[k * dim + k] = 1.0;
  return RemapMatrix(dim, std::move(p));
}

EmbeddingMatrix RemapMatrix::apply(const EmbeddingMatrix& embedding) const {
  if (embedding.dim() != dim_) {
    raise(ErrorCode::kDimensionMismatch, "remap dim " + std::to_string(dim_) +
                                             " does not match embedding dim " +
                                             std::to_string(embedding.dim()));
  }
  std::vector<double> out(embedding.rows() * dim_);
  for (std::size_t r = 0; r < embedding.rows(); ++r) {
    const auto x = embedding.row(r);
    for (std::size_t i = 0; i < dim_; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim_; ++k) s += projection_[i * dim_ + k] * x[k];
      if (bias_) s += (*bias_)[i];
      out[r * dim_ + i] = s;
    }
  }
  return EmbeddingMatrix(embedding.rows(), dim_, std::move(out));
}

std::string_view approximation_name(Approximation approx) noexcept {
  switch (approx) {
    case Approximation::kWmd: return "wmd";
    case Approximation::kRwmd: return "rwmd";
    case Approximation::kWcd: return "wcd";
  }
  return "unknown";
}

double document_distance(const WeightedDocument& a, const WeightedDocument& b, Approximation approx,
                         transport::Measure measure) {
  switch (approx) {
    case Approximation::kWmd: return transport::wmd(a, b, measure).distance;
    case Approximation::kRwmd: return transport::rwmd(a, b, measure);
    case Approximation::kWcd: return transport::wcd(a, b);
  }
  raise(ErrorCode::kInvalidArgument, "unknown approximation");
}

double cosine_similarity(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) raise(ErrorCode::kDimensionMismatch, "vectors differ in length");
  const double nx = std::sqrt(dot(x, x));
  const double ny = std::sqrt(dot(y, y));
  if (nx == 0.0 || ny == 0.0) raise(ErrorCode::kZeroVector, "cosine of a zero vector");
  return dot(x, y) / (nx * ny);
}

MetricScore greedy_match_score(const WeightedDocument& hyp, const WeightedDocument& ref) {
  require_normalized(hyp);
  require_normalized(ref);
  require_same_dim(hyp, ref);
  const auto hyp_norms = row_norms(hyp.embedding);
  const auto ref_norms = row_norms(ref.embedding);

  const double precision = greedy_side(hyp, hyp_norms, ref, ref_norms);
  const double recall = greedy_side(ref, ref_norms, hyp, hyp_norms);
  const double denom = precision + recall;
  const double f1 = denom == 0.0 ? 0.0 : 2.0 * precision * recall / denom;
  return {"greedy", f1, {{"precision", precision}, {"recall", recall}, {"f1", f1}}};
}

MetricScore moverscore(const WeightedDocument& hyp, const WeightedDocument& ref,
                       const IdfTable& idf) {
  return moverscore_variant(hyp, ref, idf, Approximation::kWmd);
}

MetricScore moverscore_variant(const WeightedDocument& hyp, const WeightedDocument& ref,
                               const IdfTable& idf, Approximation approx) {
  require_same_dim(hyp, ref);
  const auto h = reweight(hyp, idf);
  const auto r = reweight(ref, idf);
  const double d = document_distance(h, r, approx);
  return {"moverscore-" + std::string(approximation_name(approx)), -d, {{"distance", d}}};
}

MetricScore xmoverscore(const WeightedDocument& src, const WeightedDocument& hyp,
                        const std::optional<RemapMatrix>& remap,
                        const std::optional<LmPenalty>& lm, const XMoverOptions& options) {
  require_same_dim(src, hyp);
  const double d = [&] {
    if (!remap) return document_distance(src, hyp, options.approx, options.measure);
    WeightedDocument mapped{src.tokens, src.weights, remap->apply(src.embedding)};
    return document_distance(mapped, hyp, options.approx, options.measure);
  }();
  if (lm && !std::isfinite(lm->score)) raise(ErrorCode::kNonFiniteValue, "LM penalty is NaN or Inf");
  const double lm_score = lm ? lm->score : 0.0;
  const double value = options.w_dist * -d + options.w_lm * lm_score;
  std::string id = "xmoverscore-" + std::string(approximation_name(options.approx));
  id += remap ? "-remap" : "-direct";
  return {std::move(id), value, {{"distance", d}, {"lm", lm_score}}};
}

MetricScore sentsim(std::span<const double> src_sent, std::span<const double> hyp_sent,
                    double word_score, SentSimCombine combine, double alpha) {
  if (!std::isfinite(word_score)) raise(ErrorCode::kNonFiniteValue, "word score is NaN or Inf");
  const double cos = cosine_similarity(src_sent, hyp_sent);
  double value = 0.0;
  if (combine == SentSimCombine::kMean) {
    value = (cos + word_score) / 2.0;
  } else {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
      raise(ErrorCode::kInvalidArgument, "sentsim alpha must lie in [0, 1]");
    }
    value = alpha * cos + (1.0 - alpha) * word_score;
  }
  return {"sentsim", value, {{"sentence_cosine", cos}, {"word_score", word_score}}};
}

}  // namespace effeval::metrics
