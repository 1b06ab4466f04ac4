#include "effeval/scoring.hpp"

#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "effeval/ingest.hpp"
#include "text_util.hpp"

namespace effeval::scoring {
namespace {

using bench::Stage;
using bench::StageRecorder;
using ingest::ContainerReader;
using ingest::ContainerSegment;

struct Resources {
  std::optional<metrics::IdfTable> idf;
  std::optional<metrics::RemapMatrix> remap;
  std::optional<ingest::LmPenaltyTable> lm;
};

struct Batch {
  std::vector<ContainerSegment> hyp;
  std::vector<ContainerSegment> ref;
  std::vector<ContainerSegment> src;
  std::vector<ContainerSegment> src_sent;
  std::vector<ContainerSegment> hyp_sent;
};

WeightedDocument make_document(const ContainerSegment& seg, const metrics::IdfTable* idf) {
  std::vector<double> weights = idf ? metrics::idf_weights(*idf, seg.tokens)
                                    : std::vector<double>(seg.tokens.size(), 1.0);
  return validate_document({seg.tokens, std::move(weights), seg.embedding});
}

std::vector<double> mean_pool(const EmbeddingMatrix& m) {
  if (m.rows() == 0) raise(ErrorCode::kEmptyDocument, "cannot pool an empty segment");
  std::vector<double> v(m.dim(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto row = m.row(i);
    for (std::size_t k = 0; k < m.dim(); ++k) v[k] += row[k];
  }
  for (auto& x : v) x /= static_cast<double>(m.rows());
  return v;
}

std::vector<double> sentence_vector(const ContainerSegment& seg) {
  if (seg.embedding.rows() != 1) {
    raise(ErrorCode::kLayoutMismatch, "sentence containers need exactly one row per segment, got " +
                                          std::to_string(seg.embedding.rows()));
  }
  const auto row = seg.embedding.row(0);
  return {row.begin(), row.end()};
}

double distance_by(const WeightedDocument& a, const WeightedDocument& b,
                   metrics::Approximation approx, transport::Measure measure, StageRecorder& rec) {
  if (approx == metrics::Approximation::kWcd) {
    auto t = rec.time(Stage::kDistance);
    return transport::wcd(a, b);
  }
  std::optional<transport::CostMatrix> cost;
  {
    auto t = rec.time(Stage::kCostMatrix);
    cost.emplace(transport::cost_matrix(a.embedding, b.embedding, measure));
  }
  auto t = rec.time(Stage::kDistance);
  if (approx == metrics::Approximation::kRwmd) return transport::rwmd(a.weights, b.weights, *cost);
  return transport::solve_transport(a.weights, b.weights, *cost).distance;
}

double score_one(const Batch& batch, std::size_t i, std::size_t index, const Options& o,
                 const Resources& res, StageRecorder& rec) {
  switch (o.metric) {
    case MetricKind::kGreedy: {
      std::optional<WeightedDocument> hyp;
      std::optional<WeightedDocument> ref;
      {
        auto t = rec.time(Stage::kCostMatrix);
        const auto* idf = res.idf ? &*res.idf : nullptr;
        hyp.emplace(make_document(batch.hyp[i], idf));
        ref.emplace(make_document(batch.ref[i], idf));
      }
      auto t = rec.time(Stage::kDistance);
      return metrics::greedy_match_score(*hyp, *ref).value;
    }
    case MetricKind::kMover: {
      std::optional<WeightedDocument> hyp;
      std::optional<WeightedDocument> ref;
      {
        auto t = rec.time(Stage::kCostMatrix);
        hyp.emplace(make_document(batch.hyp[i], &*res.idf));
        ref.emplace(make_document(batch.ref[i], &*res.idf));
      }
      const double d =
          distance_by(*hyp, *ref, o.variant, transport::Measure::kEuclidean, rec);
      auto t = rec.time(Stage::kAggregate);
      return -d;
    }
    case MetricKind::kXMover: {
      std::optional<WeightedDocument> src;
      std::optional<WeightedDocument> hyp;
      {
        auto t = rec.time(Stage::kCostMatrix);
        src.emplace(make_document(batch.src[i], nullptr));
        hyp.emplace(make_document(batch.hyp[i], nullptr));
        if (src->embedding.dim() != hyp->embedding.dim()) {
          raise(ErrorCode::kDimensionMismatch, "source and hypothesis dims differ");
        }
        if (res.remap) src->embedding = res.remap->apply(src->embedding);
      }
      const double d = distance_by(*src, *hyp, o.variant, o.measure, rec);
      auto t = rec.time(Stage::kAggregate);
      const double lm = res.lm ? res.lm->at(ingest::segment_key(index)).score : 0.0;
      return o.w_dist * -d + o.w_lm * lm;
    }
    case MetricKind::kSentSim: {
      std::optional<WeightedDocument> src;
      std::optional<WeightedDocument> hyp;
      {
        auto t = rec.time(Stage::kCostMatrix);
        src.emplace(make_document(batch.src[i], nullptr));
        hyp.emplace(make_document(batch.hyp[i], nullptr));
        if (res.remap) src->embedding = res.remap->apply(src->embedding);
      }
      double word = 0.0;
      {
        auto t = rec.time(Stage::kDistance);
        word = metrics::greedy_match_score(*hyp, *src).value;
      }
      auto t = rec.time(Stage::kAggregate);
      std::vector<double> src_vec;
      if (!batch.src_sent.empty()) {
        src_vec = sentence_vector(batch.src_sent[i]);
        if (res.remap) {
          const auto mapped = res.remap->apply(EmbeddingMatrix(1, src_vec.size(), src_vec));
          src_vec.assign(mapped.values().begin(), mapped.values().end());
        }
      } else {
        src_vec = mean_pool(src->embedding);
      }
      const auto hyp_vec =
          batch.hyp_sent.empty() ? mean_pool(hyp->embedding) : sentence_vector(batch.hyp_sent[i]);
      const auto combine =
          o.sentsim_alpha ? metrics::SentSimCombine::kWeighted : metrics::SentSimCombine::kMean;
      return metrics::sentsim(src_vec, hyp_vec, word, combine, o.sentsim_alpha.value_or(0.5)).value;
    }
  }
  raise(ErrorCode::kInternal, "unknown metric");
}

std::string metric_id(const Options& o, const Resources& res) {
  const std::string variant(metrics::approximation_name(o.variant));
  switch (o.metric) {
    case MetricKind::kGreedy: return "greedy";
    case MetricKind::kMover: return "moverscore-" + variant;
    case MetricKind::kXMover:
      return "xmoverscore-" + variant + (res.remap ? "-remap" : "-direct");
    case MetricKind::kSentSim: return "sentsim";
  }
  return "unknown";
}

struct Stream {
  std::string name;
  std::filesystem::path path;
  std::unique_ptr<ContainerReader> reader;
  std::vector<ContainerSegment> Batch::*slot;
};

[[noreturn]] void rethrow_with(const std::string& context, const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const Error& e) {
    raise(e.code(), context + ": " + e.what());
  } catch (const std::bad_alloc&) {
    throw;
  } catch (const std::exception& e) {
    raise(ErrorCode::kInternal, context + ": " + e.what());
  }
}

}  // namespace

std::string_view metric_name(MetricKind kind) noexcept {
  switch (kind) {
    case MetricKind::kGreedy: return "greedy";
    case MetricKind::kMover: return "mover";
    case MetricKind::kXMover: return "xmover";
    case MetricKind::kSentSim: return "sentsim";
  }
  return "unknown";
}

std::optional<MetricKind> parse_metric(std::string_view name) noexcept {
  for (auto k : {MetricKind::kGreedy, MetricKind::kMover, MetricKind::kXMover, MetricKind::kSentSim}) {
    if (metric_name(k) == name) return k;
  }
  return std::nullopt;
}

std::vector<std::string> missing_inputs(const Inputs& in, MetricKind metric) {
  std::vector<std::string> missing;
  auto need = [&](const std::optional<std::filesystem::path>& p, const char* name) {
    if (!p) missing.emplace_back(name);
  };
  switch (metric) {
    case MetricKind::kGreedy:
      need(in.hyp, "hyp");
      need(in.ref, "ref");
      break;
    case MetricKind::kMover:
      need(in.hyp, "hyp");
      need(in.ref, "ref");
      need(in.idf, "idf");
      break;
    case MetricKind::kXMover:
    case MetricKind::kSentSim:
      need(in.src, "src");
      need(in.hyp, "hyp");
      break;
  }
  return missing;
}

Result score(const Inputs& in, const Options& o, StageRecorder* stages) {
  if (const auto missing = missing_inputs(in, o.metric); !missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
    raise(ErrorCode::kInvalidArgument,
          std::string(metric_name(o.metric)) + " needs input(s): " + names);
  }
  if (o.batch_size == 0) raise(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  if (o.jobs == 0) raise(ErrorCode::kInvalidArgument, "jobs must be >= 1");
  if (!std::isfinite(o.w_dist) || !std::isfinite(o.w_lm)) {
    raise(ErrorCode::kNonFiniteValue, "metric weights must be finite");
  }
  if (o.sentsim_alpha && !(*o.sentsim_alpha >= 0.0 && *o.sentsim_alpha <= 1.0)) {
    raise(ErrorCode::kInvalidArgument, "sentsim alpha must lie in [0, 1]");
  }

  StageRecorder local;
  StageRecorder& rec = stages ? *stages : local;

  Resources res;
  std::vector<Stream> streams;
  std::optional<std::size_t> records;
  {
    auto t = rec.time(Stage::kLoadEmbeddings);
    const bool word_side = o.metric == MetricKind::kGreedy || o.metric == MetricKind::kMover;
    if (in.idf && (word_side)) res.idf = ingest::read_idf(*in.idf);
    const bool cross = o.metric == MetricKind::kXMover || o.metric == MetricKind::kSentSim;
    if (in.remap && cross) res.remap = ingest::read_remap(*in.remap);
    if (in.lm && o.metric == MetricKind::kXMover) res.lm = ingest::read_lm_penalties(*in.lm);
    if (in.segments) records = ingest::read_segments(*in.segments).size();

    auto add = [&](const std::optional<std::filesystem::path>& p, const char* name,
                   std::vector<ContainerSegment> Batch::*slot) {
      if (!p) return;
      streams.push_back({name, *p, std::make_unique<ContainerReader>(*p), slot});
    };
    add(in.hyp, "hyp", &Batch::hyp);
    if (word_side) add(in.ref, "ref", &Batch::ref);
    if (cross) add(in.src, "src", &Batch::src);
    if (o.metric == MetricKind::kSentSim) {
      add(in.src_sent, "src-sent", &Batch::src_sent);
      add(in.hyp_sent, "hyp-sent", &Batch::hyp_sent);
    }
  }
  const std::size_t count = streams.front().reader->segment_count();
  for (const auto& s : streams) {
    if (s.reader->segment_count() != count) {
      raise(ErrorCode::kAlignmentMismatch,
            "'" + s.path.string() + "' has " + std::to_string(s.reader->segment_count()) +
                " segments but '" + streams.front().path.string() + "' has " + std::to_string(count));
    }
  }
  ingest::check_alignment(count, records, nullptr);
  if (res.remap && res.remap->dim() != streams.front().reader->dim()) {
    raise(ErrorCode::kDimensionMismatch, "remap dim " + std::to_string(res.remap->dim()) +
                                             " does not match embedding dim " +
                                             std::to_string(streams.front().reader->dim()));
  }

  Result result;
  result.metric_id = metric_id(o, res);
  result.keys.reserve(count);
  result.values.reserve(count);

  for (std::size_t start = 0; start < count; start += o.batch_size) {
    const std::size_t n = std::min(o.batch_size, count - start);
    Batch batch;
    {
      auto t = rec.time(Stage::kLoadEmbeddings);
      for (auto& s : streams) {
        auto& slot = batch.*(s.slot);
        for (std::size_t k = 0; k < n; ++k) slot.push_back(*s.reader->next());
      }
    }

    std::vector<double> values(n);
    std::vector<StageRecorder> worker_stages(n);
    std::vector<std::exception_ptr> errors(n);
    auto work = [&](std::size_t k) {
      try {
        values[k] = score_one(batch, k, start + k, o, res, worker_stages[k]);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    };
    const std::size_t workers = std::min(o.jobs, n);
    if (workers <= 1) {
      for (std::size_t k = 0; k < n; ++k) work(k);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          for (std::size_t k = w; k < n; k += workers) work(k);
        });
      }
      for (auto& th : pool) th.join();
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (errors[k]) rethrow_with("segment " + ingest::segment_key(start + k), errors[k]);
      for (std::size_t s = 0; s < bench::kStageCount; ++s) {
        rec.add(static_cast<Stage>(s), worker_stages[k].timings().ms[s]);
      }
    }
    auto t = rec.time(Stage::kAggregate);
    for (std::size_t k = 0; k < n; ++k) {
      result.keys.push_back(ingest::segment_key(start + k));
      result.values.push_back(values[k]);
    }
  }
  {
    auto t = rec.time(Stage::kLoadEmbeddings);
    for (auto& s : streams) {
      if (s.reader->next()) raise(ErrorCode::kInternal, "container reader overran its segment count");
    }
  }
  return result;
}

std::string render_scores(const Result& result) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < result.values.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", result.values[i]);
    out += result.keys[i] + '\t' + buf + '\n';
  }
  return out;
}

Result read_scores(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  Result r;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto where = "'" + path.string() + "' line " + std::to_string(line_number);
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      raise(ErrorCode::kColumnCount, where + " needs 2 columns");
    }
    const auto value = detail::parse_real(std::string_view(line).substr(tab + 1));
    if (!value) raise(ErrorCode::kBadScore, where + ": score is not a finite decimal");
    r.keys.push_back(line.substr(0, tab));
    r.values.push_back(*value);
  }
  return r;
}

stats::CorrelationReport correlate_scores(const std::filesystem::path& segments,
                                          const Result& scores, stats::Aggregation mode) {
  const auto records = ingest::read_segments(segments);
  if (scores.values.size() != records.size()) {
    raise(ErrorCode::kAlignmentMismatch, std::to_string(scores.values.size()) +
                                             " scores for " + std::to_string(records.size()) +
                                             " segment records");
  }
  std::vector<double> metric;
  std::vector<double> human;
  std::vector<std::string> groups;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (scores.keys[i] != ingest::segment_key(i)) {
      raise(ErrorCode::kAlignmentMismatch, "score key '" + scores.keys[i] +
                                               "' does not match record " + ingest::segment_key(i));
    }
    if (!records[i].human_score) continue;
    metric.push_back(scores.values[i]);
    human.push_back(*records[i].human_score);
    groups.push_back(records[i].lang_pair);
  }
  return stats::correlate(metric, human, groups, mode);
}

}  // namespace effeval::scoring
