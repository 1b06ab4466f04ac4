#include "effeval/effeval.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "effeval/adapterlab.hpp"
#include "effeval/bench.hpp"
#include "effeval/ingest.hpp"
#include "effeval/scoring.hpp"
#include "effeval/stats.hpp"
#include "effeval/synthetic.hpp"

struct effeval_container {
  std::unique_ptr<effeval::ingest::ContainerReader> reader;
  std::optional<effeval::ingest::ContainerSegment> current;
};

struct effeval_container_writer {
  effeval_container_writer(const char* path, size_t dim) : writer(path, dim) {}
  effeval::ingest::ContainerWriter writer;
};

struct effeval_scores {
  effeval::scoring::Result result;
  effeval::bench::StageTimings stages;
};

struct effeval_correlation {
  effeval::stats::CorrelationReport report;
};

struct effeval_report {
  std::vector<effeval::bench::ReportEntry> entries;
};

namespace {

using namespace effeval;

thread_local std::string g_last_error;

template <typename Fn>
effeval_status guarded(Fn&& fn) noexcept {
  try {
    fn();
    return EFFEVAL_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<effeval_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown exception";
  }
  return EFFEVAL_INTERNAL;
}

void require(bool condition, const char* what) {
  if (!condition) raise(ErrorCode::kInvalidArgument, what);
}

char* duplicate(const std::string& text) {
  auto* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, text.data(), text.size() + 1);
  return out;
}

WeightedDocument document_from(const double* values, const double* weights, size_t rows, size_t dim) {
  require(values != nullptr || rows == 0, "embedding pointer is null");
  require(dim >= 1, "dim must be >= 1");
  std::vector<double> v(values, values + rows * dim);
  std::vector<double> w = weights ? std::vector<double>(weights, weights + rows)
                                  : std::vector<double>(rows, 1.0);
  std::vector<std::string> tokens(rows);
  for (size_t i = 0; i < rows; ++i) tokens[i] = std::to_string(i);
  return validate_document({std::move(tokens), std::move(w), EmbeddingMatrix(rows, dim, std::move(v))});
}

transport::Measure to_measure(effeval_measure m) {
  switch (m) {
    case EFFEVAL_MEASURE_EUCLIDEAN: return transport::Measure::kEuclidean;
    case EFFEVAL_MEASURE_COSINE: return transport::Measure::kCosineDistance;
  }
  raise(ErrorCode::kInvalidArgument, "unknown measure");
}

metrics::Approximation to_approx(effeval_approx a) {
  switch (a) {
    case EFFEVAL_APPROX_WMD: return metrics::Approximation::kWmd;
    case EFFEVAL_APPROX_RWMD: return metrics::Approximation::kRwmd;
    case EFFEVAL_APPROX_WCD: return metrics::Approximation::kWcd;
  }
  raise(ErrorCode::kInvalidArgument, "unknown approximation");
}

scoring::MetricKind to_metric(effeval_metric m) {
  switch (m) {
    case EFFEVAL_METRIC_GREEDY: return scoring::MetricKind::kGreedy;
    case EFFEVAL_METRIC_MOVER: return scoring::MetricKind::kMover;
    case EFFEVAL_METRIC_XMOVER: return scoring::MetricKind::kXMover;
    case EFFEVAL_METRIC_SENTSIM: return scoring::MetricKind::kSentSim;
  }
  raise(ErrorCode::kInvalidArgument, "unknown metric");
}

std::optional<std::filesystem::path> path_or_none(const char* p) {
  if (p == nullptr || *p == '\0') return std::nullopt;
  return std::filesystem::path(p);
}

std::pair<scoring::Inputs, scoring::Options> convert(const effeval_score_options* o) {
  require(o != nullptr, "score options are null");
  scoring::Inputs in;
  in.segments = path_or_none(o->segments);
  in.hyp = path_or_none(o->hyp_emb);
  in.ref = path_or_none(o->ref_emb);
  in.src = path_or_none(o->src_emb);
  in.src_sent = path_or_none(o->src_sent_emb);
  in.hyp_sent = path_or_none(o->hyp_sent_emb);
  in.idf = path_or_none(o->idf);
  in.remap = path_or_none(o->remap);
  in.lm = path_or_none(o->lm);
  scoring::Options opt;
  opt.metric = to_metric(o->metric);
  opt.variant = to_approx(o->variant);
  opt.measure = to_measure(o->measure);
  opt.batch_size = o->batch_size;
  opt.jobs = o->jobs;
  opt.w_dist = o->w_dist;
  opt.w_lm = o->w_lm;
  if (o->sentsim_alpha >= 0.0) opt.sentsim_alpha = o->sentsim_alpha;
  return {std::move(in), opt};
}

std::string describe(const scoring::Inputs& in, const scoring::Options& o) {
  std::string s = std::string(scoring::metric_name(o.metric)) + '|' +
                  std::string(metrics::approximation_name(o.variant)) + '|' +
                  std::to_string(static_cast<int>(o.measure)) + '|' + std::to_string(o.w_dist) + '|' +
                  std::to_string(o.w_lm) + '|' + std::to_string(o.sentsim_alpha.value_or(-1.0));
  for (const auto* p : {&in.segments, &in.hyp, &in.ref, &in.src, &in.src_sent, &in.hyp_sent, &in.idf,
                        &in.remap, &in.lm}) {
    s += '|' + (*p ? (*p)->string() : std::string());
  }
  return s;
}

const bench::BenchmarkRecord& record_at(const effeval_report* r, size_t i) {
  return r->entries.at(i).record;
}

}  // namespace

extern "C" {

const char* effeval_version(void) { return "0.1.0"; }

const char* effeval_status_name(effeval_status status) {
  return error_code_name(static_cast<ErrorCode>(status)).data();
}

const char* effeval_last_error(void) { return g_last_error.c_str(); }

void effeval_string_free(char* text) { std::free(text); }

effeval_status effeval_distance(const double* a, const double* a_weights, size_t a_rows,
                                const double* b, const double* b_weights, size_t b_rows, size_t dim,
                                effeval_approx approx, effeval_measure measure, double* out) {
  return guarded([&] {
    require(out != nullptr, "output pointer is null");
    const auto da = document_from(a, a_weights, a_rows, dim);
    const auto db = document_from(b, b_weights, b_rows, dim);
    *out = metrics::document_distance(da, db, to_approx(approx), to_measure(measure));
  });
}

effeval_status effeval_greedy(const double* hyp, size_t hyp_rows, const double* ref, size_t ref_rows,
                              size_t dim, double* precision, double* recall, double* f1) {
  return guarded([&] {
    const auto h = document_from(hyp, nullptr, hyp_rows, dim);
    const auto r = document_from(ref, nullptr, ref_rows, dim);
    const auto s = metrics::greedy_match_score(h, r);
    if (precision) *precision = *s.subvalue("precision");
    if (recall) *recall = *s.subvalue("recall");
    if (f1) *f1 = s.value;
  });
}

effeval_status effeval_pearson(const double* x, const double* y, size_t n, double* out) {
  return guarded([&] {
    require(x != nullptr && y != nullptr && out != nullptr, "null pointer argument");
    *out = stats::pearson_r({{x, n}, {y, n}});
  });
}

effeval_status effeval_kendall(const double* x, const double* y, size_t n, double* out) {
  return guarded([&] {
    require(x != nullptr && y != nullptr && out != nullptr, "null pointer argument");
    *out = stats::kendall_tau({{x, n}, {y, n}});
  });
}

double effeval_default_grid_intensity(void) { return bench::kUs2021GridIntensity; }

effeval_status effeval_carbon(double hours, double watts, double intensity, double* kg_co2) {
  return guarded([&] {
    require(kg_co2 != nullptr, "output pointer is null");
    *kg_co2 = bench::carbon_estimate(hours, {watts, intensity});
  });
}

effeval_status effeval_container_open(const char* path, effeval_container** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null pointer argument");
    auto c = std::make_unique<effeval_container>();
    c->reader = std::make_unique<ingest::ContainerReader>(path);
    *out = c.release();
  });
}

void effeval_container_close(effeval_container* container) { delete container; }

size_t effeval_container_dim(const effeval_container* c) { return c ? c->reader->dim() : 0; }

size_t effeval_container_segment_count(const effeval_container* c) {
  return c ? c->reader->segment_count() : 0;
}

effeval_status effeval_container_next(effeval_container* c, int* has_segment) {
  return guarded([&] {
    require(c != nullptr && has_segment != nullptr, "null pointer argument");
    c->current.reset();
    c->current = c->reader->next();
    *has_segment = c->current ? 1 : 0;
  });
}

size_t effeval_container_token_count(const effeval_container* c) {
  return c && c->current ? c->current->tokens.size() : 0;
}

const char* effeval_container_token(const effeval_container* c, size_t index) {
  if (!c || !c->current || index >= c->current->tokens.size()) return nullptr;
  return c->current->tokens[index].c_str();
}

const double* effeval_container_values(const effeval_container* c) {
  if (!c || !c->current) return nullptr;
  return c->current->embedding.values().data();
}

effeval_status effeval_container_check(const char* path, effeval_container_info* info) {
  return guarded([&] {
    require(path != nullptr, "path is null");
    const auto i = ingest::check_container(path);
    if (info) {
      *info = {i.version, i.flags, i.dim, i.segment_count, i.crc, i.payload_bytes, i.total_tokens};
    }
  });
}

effeval_status effeval_check_alignment(const char* container_path, const char* segments_path,
                                       const char* manifest_path) {
  return guarded([&] {
    require(container_path != nullptr, "container path is null");
    const auto info = ingest::check_container(container_path);
    std::optional<std::size_t> records;
    if (segments_path) records = ingest::read_segments(segments_path).size();
    std::optional<ingest::SidecarManifest> manifest;
    if (manifest_path) manifest = ingest::read_manifest(manifest_path);
    ingest::check_alignment(info.segment_count, records, manifest ? &*manifest : nullptr);
  });
}

effeval_status effeval_container_writer_open(const char* path, size_t dim,
                                             effeval_container_writer** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null pointer argument");
    *out = new effeval_container_writer(path, dim);
  });
}

effeval_status effeval_container_writer_add(effeval_container_writer* w, const char* const* tokens,
                                            size_t count, const float* values) {
  return guarded([&] {
    require(w != nullptr, "writer is null");
    require(count == 0 || (tokens != nullptr && values != nullptr), "null pointer argument");
    std::vector<std::string> t;
    t.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      require(tokens[i] != nullptr, "token pointer is null");
      t.emplace_back(tokens[i]);
    }
    // dim is checked by the writer against the value count
    std::span<const float> v;
    if (count > 0) v = {values, values + count * w->writer.dim()};
    w->writer.add(t, v);
  });
}

effeval_status effeval_container_writer_finish(effeval_container_writer* w) {
  std::unique_ptr<effeval_container_writer> owned(w);
  return guarded([&] {
    require(w != nullptr, "writer is null");
    owned->writer.finish();
  });
}

void effeval_score_options_init(effeval_score_options* o) {
  if (o == nullptr) return;
  *o = {};
  o->metric = EFFEVAL_METRIC_GREEDY;
  o->variant = EFFEVAL_APPROX_WMD;
  o->measure = EFFEVAL_MEASURE_EUCLIDEAN;
  o->batch_size = 1;
  o->jobs = 1;
  o->w_dist = 1.0;
  o->w_lm = 0.1;
  o->sentsim_alpha = -1.0;
}

effeval_status effeval_score(const effeval_score_options* options, effeval_scores** out) {
  return guarded([&] {
    require(out != nullptr, "output pointer is null");
    const auto [in, opt] = convert(options);
    auto s = std::make_unique<effeval_scores>();
    bench::StageRecorder rec;
    s->result = scoring::score(in, opt, &rec);
    s->stages = rec.timings();
    *out = s.release();
  });
}

void effeval_scores_free(effeval_scores* scores) { delete scores; }

size_t effeval_scores_count(const effeval_scores* s) { return s ? s->result.values.size() : 0; }

const char* effeval_scores_metric_id(const effeval_scores* s) {
  return s ? s->result.metric_id.c_str() : nullptr;
}

double effeval_scores_value(const effeval_scores* s, size_t index) {
  return s->result.values.at(index);
}

double effeval_scores_stage_ms(const effeval_scores* s, effeval_stage stage) {
  return s->stages[static_cast<bench::Stage>(stage)];
}

effeval_status effeval_scores_render(const effeval_scores* s, char** text) {
  return guarded([&] {
    require(s != nullptr && text != nullptr, "null pointer argument");
    *text = duplicate(scoring::render_scores(s->result));
  });
}

effeval_status effeval_correlate(const char* segments_path, const char* scores_path,
                                 const effeval_score_options* options, int per_language,
                                 effeval_correlation** out) {
  return guarded([&] {
    require(segments_path != nullptr && out != nullptr, "null pointer argument");
    scoring::Result scores;
    if (scores_path) {
      scores = scoring::read_scores(scores_path);
    } else {
      auto [in, opt] = convert(options);
      in.segments = segments_path;
      scores = scoring::score(in, opt);
    }
    auto c = std::make_unique<effeval_correlation>();
    c->report = scoring::correlate_scores(
        segments_path, scores, per_language ? stats::Aggregation::kPerLanguage : stats::Aggregation::kPooled);
    *out = c.release();
  });
}

effeval_status effeval_correlate_arrays(const double* metric, const double* human,
                                        const char* const* groups, size_t n, int per_language,
                                        effeval_correlation** out) {
  return guarded([&] {
    require(metric != nullptr && human != nullptr && out != nullptr, "null pointer argument");
    std::vector<std::string> g(n, "pooled");
    if (groups) {
      for (size_t i = 0; i < n; ++i) {
        require(groups[i] != nullptr, "group pointer is null");
        g[i] = groups[i];
      }
    }
    auto c = std::make_unique<effeval_correlation>();
    c->report = stats::correlate({metric, n}, {human, n}, g,
                                 per_language ? stats::Aggregation::kPerLanguage : stats::Aggregation::kPooled);
    *out = c.release();
  });
}

void effeval_correlation_free(effeval_correlation* report) { delete report; }

size_t effeval_correlation_group_count(const effeval_correlation* r) {
  return r ? r->report.groups.size() : 0;
}

const char* effeval_correlation_group_name(const effeval_correlation* r, size_t i) {
  return r->report.groups.at(i).group.c_str();
}

size_t effeval_correlation_group_size(const effeval_correlation* r, size_t i) {
  return r->report.groups.at(i).n;
}

int effeval_correlation_group_pearson(const effeval_correlation* r, size_t i, double* out) {
  const auto& v = r->report.groups.at(i).pearson;
  if (v && out) *out = *v;
  return v ? 1 : 0;
}

int effeval_correlation_group_kendall(const effeval_correlation* r, size_t i, double* out) {
  const auto& v = r->report.groups.at(i).kendall;
  if (v && out) *out = *v;
  return v ? 1 : 0;
}

const char* effeval_correlation_group_error(const effeval_correlation* r, size_t i) {
  return r->report.groups.at(i).error.c_str();
}

int effeval_correlation_pearson(const effeval_correlation* r, double* out) {
  if (r->report.pearson && out) *out = *r->report.pearson;
  return r->report.pearson ? 1 : 0;
}

int effeval_correlation_kendall(const effeval_correlation* r, double* out) {
  if (r->report.kendall && out) *out = *r->report.kendall;
  return r->report.kendall ? 1 : 0;
}

effeval_report* effeval_report_new(void) { return new (std::nothrow) effeval_report(); }

void effeval_report_free(effeval_report* report) { delete report; }

size_t effeval_report_count(const effeval_report* r) { return r ? r->entries.size() : 0; }

double effeval_report_ms_per_segment(const effeval_report* r, size_t i) {
  return record_at(r, i).ms_per_segment;
}

size_t effeval_report_batch_size(const effeval_report* r, size_t i) { return record_at(r, i).batch_size; }

size_t effeval_report_runs(const effeval_report* r, size_t i) { return record_at(r, i).runs(); }

uint64_t effeval_report_peak_bytes(const effeval_report* r, size_t i) {
  return record_at(r, i).peak_bytes.value_or(0);
}

double effeval_report_stage_ms(const effeval_report* r, size_t i, effeval_stage stage) {
  return record_at(r, i).stages[static_cast<bench::Stage>(stage)];
}

effeval_status effeval_report_add_point(effeval_report* r, const char* label, double ms_per_segment,
                                        double pearson) {
  return guarded([&] {
    require(r != nullptr && label != nullptr, "null pointer argument");
    require(std::isfinite(ms_per_segment) && std::isfinite(pearson), "point must be finite");
    bench::ReportEntry e;
    e.record.metric_id = label;
    e.record.ms_per_segment = ms_per_segment;
    e.pearson = pearson;
    e.label = label;
    r->entries.push_back(std::move(e));
  });
}

effeval_status effeval_report_render(const effeval_report* r, effeval_format format, char** text) {
  return guarded([&] {
    require(r != nullptr && text != nullptr, "null pointer argument");
    bench::ReportFormat f;
    switch (format) {
      case EFFEVAL_FORMAT_CSV: f = bench::ReportFormat::kCsv; break;
      case EFFEVAL_FORMAT_MARKDOWN: f = bench::ReportFormat::kMarkdown; break;
      case EFFEVAL_FORMAT_PLOTDATA: f = bench::ReportFormat::kPlotData; break;
      default: raise(ErrorCode::kInvalidArgument, "unknown report format");
    }
    *text = duplicate(bench::emit_report(r->entries, f));
  });
}

effeval_status effeval_bench(const effeval_score_options* options, const char* dataset_id, size_t runs,
                             effeval_report* report) {
  return guarded([&] {
    require(report != nullptr, "report is null");
    auto [in, opt] = convert(options);
    opt.jobs = 1;
    // the first pass doubles as the warm-up run
    const auto first = scoring::score(in, opt);
    bench::BenchmarkConfig config;
    config.metric_id = first.metric_id;
    config.dataset_id = dataset_id ? dataset_id : "";
    config.runs = runs;
    config.batch_size = opt.batch_size;
    config.extra = describe(in, opt);
    config.warmup = false;
    auto record = bench::time_metric(
        [&](bench::StageRecorder& rec) { scoring::score(in, opt, &rec); }, first.values.size(), config);
    report->entries.push_back({std::move(record), std::nullopt, {}});
  });
}

effeval_status effeval_sweep(const effeval_score_options* options, const char* dataset_id,
                             const size_t* batch_sizes, size_t count, size_t runs,
                             effeval_report* report) {
  return guarded([&] {
    require(report != nullptr && batch_sizes != nullptr, "null pointer argument");
    auto [in, opt] = convert(options);
    opt.jobs = 1;
    const auto first = scoring::score(in, opt);
    std::vector<double> human;
    if (in.segments) {
      for (const auto& rec : ingest::read_segments(*in.segments)) {
        if (!rec.human_score) {
          human.clear();
          break;
        }
        human.push_back(*rec.human_score);
      }
    }
    bench::BenchmarkConfig config;
    config.metric_id = first.metric_id;
    config.dataset_id = dataset_id ? dataset_id : "";
    config.runs = runs;
    config.extra = describe(in, opt);
    auto metric = [&](std::size_t size, bench::StageRecorder& rec) {
      scoring::Options o = opt;
      o.batch_size = size;
      return scoring::score(in, o, &rec).values;
    };
    auto rows = bench::sweep_batch_size(metric, first.values.size(), {batch_sizes, count}, config, human);
    for (auto& row : rows) report->entries.push_back({std::move(row.record), row.pearson, {}});
  });
}

void effeval_adapter_spec_init(effeval_adapter_spec* spec) {
  if (spec == nullptr) return;
  spec->family = "pfeiffer";
  spec->hidden_dim = 768;
  spec->bottleneck_dim = 48;
  spec->layer_count = 12;
  spec->ia3_vectors_per_layer = 3;
  spec->phm_rank = 4;
  spec->learned_residual = 0;
}

effeval_status effeval_adapter_params(const effeval_adapter_spec* spec, uint64_t* total,
                                      uint64_t* per_layer, uint64_t* dense_baseline) {
  return guarded([&] {
    require(spec != nullptr && spec->family != nullptr, "null pointer argument");
    const auto family = adapterlab::parse_family(spec->family);
    if (!family) raise(ErrorCode::kInvalidArgument, std::string("unknown adapter family '") + spec->family + "'");
    adapterlab::AdapterSpec s;
    s.family = *family;
    s.hidden_dim = spec->hidden_dim;
    s.bottleneck_dim = spec->bottleneck_dim;
    s.layer_count = spec->layer_count;
    s.ia3_vectors_per_layer = spec->ia3_vectors_per_layer;
    s.phm_rank = spec->phm_rank;
    s.learned_residual = spec->learned_residual != 0;
    const auto c = adapterlab::trainable_param_count(s);
    if (total) *total = c.total;
    if (per_layer) *per_layer = c.per_layer;
    if (dense_baseline) *dense_baseline = c.dense_baseline;
  });
}

effeval_status effeval_adapter_grad_check(size_t hidden_dim, size_t bottleneck_dim, int nonlinearity,
                                          uint64_t seed, double* max_abs_error) {
  return guarded([&] {
    require(max_abs_error != nullptr, "output pointer is null");
    require(nonlinearity == 0 || nonlinearity == 1, "nonlinearity must be 0 (identity) or 1 (relu)");
    adapterlab::AdapterSpec s;
    s.hidden_dim = hidden_dim;
    s.bottleneck_dim = bottleneck_dim;
    s.nonlinearity = nonlinearity == 1 ? adapterlab::Nonlinearity::kRelu : adapterlab::Nonlinearity::kIdentity;
    *max_abs_error = adapterlab::grad_check_bottleneck(s, seed).max_abs_error;
  });
}

void effeval_synth_options_init(effeval_synth_options* o) {
  if (o == nullptr) return;
  const synthetic::DatasetOptions d;
  o->segments = d.segments;
  o->min_tokens = d.min_tokens;
  o->max_tokens = d.max_tokens;
  o->dim = d.dim;
  o->vocabulary = d.vocabulary;
  o->seed = d.seed;
  o->lang_pairs = "de-en,cs-en";
}

effeval_status effeval_synth(const char* directory, const effeval_synth_options* o) {
  return guarded([&] {
    require(directory != nullptr && o != nullptr, "null pointer argument");
    synthetic::DatasetOptions d;
    d.segments = o->segments;
    d.min_tokens = o->min_tokens;
    d.max_tokens = o->max_tokens;
    d.dim = o->dim;
    d.vocabulary = o->vocabulary;
    d.seed = o->seed;
    if (o->lang_pairs) {
      d.lang_pairs.clear();
      std::string_view rest(o->lang_pairs);
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        d.lang_pairs.emplace_back(rest.substr(0, comma));
        rest = comma == std::string_view::npos ? std::string_view() : rest.substr(comma + 1);
      }
    }
    synthetic::write_dataset(synthetic::make_dataset(d), directory);
  });
}

}  // extern "C"
