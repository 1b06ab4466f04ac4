#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "effeval/core.hpp"
#include "effeval/transport.hpp"

namespace effeval::metrics {

/// Document frequencies over a reference corpus with plus-one smoothing:
/// idf(t) = ln((N + 1) / (df(t) + 1)); unseen tokens have df = 0.
class IdfTable {
 public:
  IdfTable(std::uint64_t doc_count, std::map<std::string, std::uint64_t> df);

  std::uint64_t doc_count() const noexcept { return doc_count_; }
  const std::map<std::string, std::uint64_t>& frequencies() const noexcept { return df_; }
  std::uint64_t df(const std::string& token) const;
  double idf(const std::string& token) const;

  friend bool operator==(const IdfTable&, const IdfTable&) = default;

 private:
  std::uint64_t doc_count_;
  std::map<std::string, std::uint64_t> df_;
};

/// IDF weight per token; if every weight is zero the result is uniform.
std::vector<double> idf_weights(const IdfTable& table, std::span<const std::string> tokens);

/// Square linear map applied to source-side embeddings: e' = P e + bias.
class RemapMatrix {
 public:
  RemapMatrix(std::size_t dim, std::vector<double> projection,
              std::optional<std::vector<double>> bias = std::nullopt);

  static RemapMatrix identity(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> projection() const noexcept { return projection_; }
  const std::optional<std::vector<double>>& bias() const noexcept { return bias_; }

  EmbeddingMatrix apply(const EmbeddingMatrix& embedding) const;

  friend bool operator==(const RemapMatrix&, const RemapMatrix&) = default;

 private:
  std::size_t dim_;
  std::vector<double> projection_;
  std::optional<std::vector<double>> bias_;
};

/// Precomputed language-model fluency score of one hypothesis.
struct LmPenalty {
  double score = 0.0;
};

enum class Approximation { kWmd, kRwmd, kWcd };

std::string_view approximation_name(Approximation approx) noexcept;

/// Distance between validated documents under the chosen approximation.
/// `measure` is ignored by WCD, which is always Euclidean on centroids.
double document_distance(const WeightedDocument& a, const WeightedDocument& b, Approximation approx,
                         transport::Measure measure = transport::Measure::kEuclidean);

/// Greedy cosine matching (BERTScore family).
///
///   R  = sum_{x in ref} w(x) max_{y in hyp} cos(x, y) / sum w(x)
///   P  = the same from the hypothesis side
///   F1 = 2PR / (P + R), defined as 0 when P + R == 0.
///
/// The score value is F1; subvalues carry precision, recall and f1.
MetricScore greedy_match_score(const WeightedDocument& hyp, const WeightedDocument& ref);

/// IDF-reweighted WMD score, negated so that larger is better.
MetricScore moverscore(const WeightedDocument& hyp, const WeightedDocument& ref,
                       const IdfTable& idf);

MetricScore moverscore_variant(const WeightedDocument& hyp, const WeightedDocument& ref,
                               const IdfTable& idf, Approximation approx);

struct XMoverOptions {
  double w_dist = 1.0;
  double w_lm = 0.1;
  Approximation approx = Approximation::kWmd;
  transport::Measure measure = transport::Measure::kEuclidean;
};

/// Reference-free score: w_dist * -distance(remap(src), hyp) + w_lm * lm.
/// Without a remap matrix this is the direct mode; a missing LM penalty
/// contributes nothing.
MetricScore xmoverscore(const WeightedDocument& src, const WeightedDocument& hyp,
                        const std::optional<RemapMatrix>& remap,
                        const std::optional<LmPenalty>& lm, const XMoverOptions& options = {});

enum class SentSimCombine { kMean, kWeighted };

/// cosine(src_sent, hyp_sent) combined with a word-level score. kMean is the
/// plain average; kWeighted uses `alpha * cos + (1 - alpha) * word_score`.
MetricScore sentsim(std::span<const double> src_sent, std::span<const double> hyp_sent,
                    double word_score, SentSimCombine combine = SentSimCombine::kMean,
                    double alpha = 0.5);

double cosine_similarity(std::span<const double> x, std::span<const double> y);

}  // namespace effeval::metrics
