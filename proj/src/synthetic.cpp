#include "effeval/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace effeval::synthetic {
namespace {

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

ingest::ContainerSegment embed(const std::vector<std::string>& tokens,
                               const std::vector<std::size_t>& ids,
                               const std::vector<std::vector<double>>& table, double noise,
                               Rng& rng) {
  std::normal_distribution<double> gauss(0.0, noise);
  const std::size_t dim = table.front().size();
  std::vector<double> values;
  values.reserve(ids.size() * dim);
  for (std::size_t id : ids) {
    for (std::size_t k = 0; k < dim; ++k) {
      // stored as f32 on disk, so keep the in-memory copy f32-exact
      values.push_back(static_cast<float>(table[id][k] + gauss(rng)));
    }
  }
  return {tokens, EmbeddingMatrix(ids.size(), dim, std::move(values))};
}

}  // namespace

std::vector<double> dirichlet(Rng& rng, std::size_t n, double alpha) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& x : w) {
    do {
      x = gamma(rng);
    } while (!(x > 0.0));
    total += x;
  }
  for (auto& x : w) x /= total;
  return w;
}

WeightedDocument random_document(Rng& rng, std::size_t tokens, std::size_t dim,
                                 bool dirichlet_weights) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> values(tokens * dim);
  for (auto& v : values) v = gauss(rng);
  std::vector<std::string> names(tokens);
  for (std::size_t i = 0; i < tokens; ++i) names[i] = "t" + std::to_string(i);
  std::vector<double> weights = dirichlet_weights
                                    ? dirichlet(rng, tokens)
                                    : std::vector<double>(tokens, 1.0 / static_cast<double>(tokens));
  return validate_document({std::move(names), std::move(weights),
                            EmbeddingMatrix(tokens, dim, std::move(values))});
}

std::vector<double> random_orthogonal(Rng& rng, std::size_t dim) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> q(dim * dim);
  for (std::size_t r = 0; r < dim; ++r) {
    double norm = 0.0;
    do {
      for (std::size_t k = 0; k < dim; ++k) q[r * dim + k] = gauss(rng);
      for (std::size_t p = 0; p < r; ++p) {
        double dot = 0.0;
        for (std::size_t k = 0; k < dim; ++k) dot += q[r * dim + k] * q[p * dim + k];
        for (std::size_t k = 0; k < dim; ++k) q[r * dim + k] -= dot * q[p * dim + k];
      }
      norm = 0.0;
      for (std::size_t k = 0; k < dim; ++k) norm += q[r * dim + k] * q[r * dim + k];
      norm = std::sqrt(norm);
    } while (norm < 1e-6);
    for (std::size_t k = 0; k < dim; ++k) q[r * dim + k] /= norm;
  }
  return q;
}

Dataset make_dataset(const DatasetOptions& o) {
  if (o.segments == 0 || o.dim == 0 || o.vocabulary == 0 || o.min_tokens == 0 ||
      o.max_tokens < o.min_tokens || o.lang_pairs.empty()) {
    raise(ErrorCode::kInvalidArgument, "synthetic dataset options out of range");
  }
  for (const auto& lp : o.lang_pairs) {
    if (!is_valid_lang_pair(lp)) raise(ErrorCode::kInvalidArgument, "bad language pair '" + lp + "'");
  }
  Rng rng(o.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<std::vector<double>> target(o.vocabulary, std::vector<double>(o.dim));
  for (auto& v : target) {
    for (auto& x : v) x = gauss(rng);
  }
  const auto q = random_orthogonal(rng, o.dim);
  std::vector<std::vector<double>> source(o.vocabulary, std::vector<double>(o.dim, 0.0));
  for (std::size_t t = 0; t < o.vocabulary; ++t) {
    for (std::size_t i = 0; i < o.dim; ++i) {
      for (std::size_t k = 0; k < o.dim; ++k) source[t][i] += q[i * o.dim + k] * target[t][k];
    }
  }

  Dataset d;
  d.dim = o.dim;
  std::uniform_int_distribution<std::size_t> length(o.min_tokens, o.max_tokens);
  std::uniform_int_distribution<std::size_t> word(0, o.vocabulary - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> human_noise(0.0, o.human_noise);
  std::map<std::string, std::uint64_t> df;
  std::map<std::string, double> lm;

  for (std::size_t s = 0; s < o.segments; ++s) {
    const std::size_t n = length(rng);
    const double sub = unit(rng) * o.max_substitution;
    std::vector<std::size_t> ref_ids(n);
    for (auto& id : ref_ids) id = word(rng);
    std::vector<std::size_t> hyp_ids = ref_ids;
    std::size_t replaced = 0;
    for (auto& id : hyp_ids) {
      if (unit(rng) < sub) {
        id = word(rng);
        ++replaced;
      }
    }
    auto names = [](const std::vector<std::size_t>& ids, const char* prefix) {
      std::vector<std::string> out;
      for (std::size_t id : ids) out.push_back(prefix + std::to_string(id));
      return out;
    };
    const auto ref_tokens = names(ref_ids, "w");
    const auto hyp_tokens = names(hyp_ids, "w");
    const auto src_tokens = names(ref_ids, "s");

    d.ref.push_back(embed(ref_tokens, ref_ids, target, o.context_noise, rng));
    d.hyp.push_back(embed(hyp_tokens, hyp_ids, target, o.context_noise, rng));
    d.src.push_back(embed(src_tokens, ref_ids, source, o.context_noise, rng));

    const double share = static_cast<double>(replaced) / static_cast<double>(n);
    SegmentRecord rec;
    rec.lang_pair = o.lang_pairs[s % o.lang_pairs.size()];
    rec.system_id = "sys" + std::to_string(s % 3);
    rec.source = join(src_tokens);
    rec.hypothesis = join(hyp_tokens);
    rec.reference = join(ref_tokens);
    rec.human_score = 1.0 - share + human_noise(rng);
    d.records.push_back(std::move(rec));

    for (const auto& t : std::set<std::string>(ref_tokens.begin(), ref_tokens.end())) ++df[t];
    lm[ingest::segment_key(s)] = -2.0 * share + human_noise(rng);
  }

  d.idf = metrics::IdfTable(o.segments, std::move(df));
  std::vector<double> qt(o.dim * o.dim);
  for (std::size_t i = 0; i < o.dim; ++i) {
    for (std::size_t k = 0; k < o.dim; ++k) qt[i * o.dim + k] = static_cast<float>(q[k * o.dim + i]);
  }
  d.remap = metrics::RemapMatrix(o.dim, std::move(qt));
  d.lm = ingest::LmPenaltyTable(std::move(lm));
  d.manifest.encoder = "synthetic-gaussian";
  d.manifest.layer_aggregation = "none";
  d.manifest.tokenizer = "whitespace";
  d.manifest.created = "1970-01-01T00:00:00Z";
  for (std::size_t s = 0; s < o.segments; ++s) d.manifest.alignment.push_back(s);
  return d;
}

DatasetPaths dataset_paths(const std::filesystem::path& dir) {
  return {dir / "segments.tsv", dir / "hyp.efev",  dir / "ref.efev", dir / "src.efev",
          dir / "idf.json",     dir / "remap.efrm", dir / "lm.tsv",  dir / "manifest.json"};
}

DatasetPaths write_dataset(const Dataset& d, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) raise(ErrorCode::kIo, "cannot create directory '" + dir.string() + "'");
  const auto p = dataset_paths(dir);
  ingest::write_segments(d.records, p.segments);
  ingest::write_container(d.hyp, d.dim, p.hyp);
  ingest::write_container(d.ref, d.dim, p.ref);
  ingest::write_container(d.src, d.dim, p.src);
  ingest::write_idf(d.idf, p.idf);
  ingest::write_remap(d.remap, p.remap);
  ingest::write_lm_penalties(d.lm, p.lm);
  ingest::write_manifest(d.manifest, p.manifest);
  return p;
}

}  // namespace effeval::synthetic
