#ifndef EFFEVAL_H
#define EFFEVAL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(EFFEVAL_BUILDING)
#    define EFFEVAL_API __declspec(dllexport)
#  else
#    define EFFEVAL_API __declspec(dllimport)
#  endif
#else
#  define EFFEVAL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum effeval_status {
  EFFEVAL_OK = 0,
  EFFEVAL_INVALID_ARGUMENT = 1,
  EFFEVAL_EMPTY_DOCUMENT = 2,
  EFFEVAL_DIMENSION_MISMATCH = 3,
  EFFEVAL_NON_FINITE_VALUE = 4,
  EFFEVAL_ZERO_VECTOR = 5,
  EFFEVAL_SOLVER_FAILURE = 6,
  EFFEVAL_ZERO_VARIANCE = 7,
  EFFEVAL_IO = 8,
  EFFEVAL_BAD_MAGIC = 9,
  EFFEVAL_CRC_MISMATCH = 10,
  EFFEVAL_TRUNCATED_PAYLOAD = 11,
  EFFEVAL_VERSION_UNSUPPORTED = 12,
  EFFEVAL_LAYOUT_MISMATCH = 13,
  EFFEVAL_COLUMN_COUNT = 14,
  EFFEVAL_BAD_SCORE = 15,
  EFFEVAL_PARSE = 16,
  EFFEVAL_MISSING_PENALTY = 17,
  EFFEVAL_ALIGNMENT_MISMATCH = 18,
  EFFEVAL_PROBE_UNAVAILABLE = 19,
  EFFEVAL_NON_POSITIVE = 20,
  EFFEVAL_PRECONDITION = 21,
  EFFEVAL_BATCH_VARIANCE = 22,
  EFFEVAL_INTERNAL = 23
} effeval_status;

typedef enum effeval_measure {
  EFFEVAL_MEASURE_EUCLIDEAN = 0,
  EFFEVAL_MEASURE_COSINE = 1
} effeval_measure;

typedef enum effeval_approx {
  EFFEVAL_APPROX_WMD = 0,
  EFFEVAL_APPROX_RWMD = 1,
  EFFEVAL_APPROX_WCD = 2
} effeval_approx;

typedef enum effeval_metric {
  EFFEVAL_METRIC_GREEDY = 0,
  EFFEVAL_METRIC_MOVER = 1,
  EFFEVAL_METRIC_XMOVER = 2,
  EFFEVAL_METRIC_SENTSIM = 3
} effeval_metric;

typedef enum effeval_stage {
  EFFEVAL_STAGE_LOAD = 0,
  EFFEVAL_STAGE_COST = 1,
  EFFEVAL_STAGE_DISTANCE = 2,
  EFFEVAL_STAGE_AGGREGATE = 3
} effeval_stage;

typedef enum effeval_format {
  EFFEVAL_FORMAT_CSV = 0,
  EFFEVAL_FORMAT_MARKDOWN = 1,
  EFFEVAL_FORMAT_PLOTDATA = 2
} effeval_format;

/* Library and error reporting. Messages are thread-local and stay valid
   until the next failing call on the same thread. */
EFFEVAL_API const char* effeval_version(void);
EFFEVAL_API const char* effeval_status_name(effeval_status status);
EFFEVAL_API const char* effeval_last_error(void);

/* Strings returned through char** are owned by the caller. */
EFFEVAL_API void effeval_string_free(char* text);

/* Distances and metrics on row-major double arrays. Weights may be NULL
   (uniform); they are filtered and renormalized like any document. */
EFFEVAL_API effeval_status effeval_distance(const double* a, const double* a_weights, size_t a_rows,
                                            const double* b, const double* b_weights, size_t b_rows,
                                            size_t dim, effeval_approx approx,
                                            effeval_measure measure, double* out);
EFFEVAL_API effeval_status effeval_greedy(const double* hyp, size_t hyp_rows, const double* ref,
                                          size_t ref_rows, size_t dim, double* precision,
                                          double* recall, double* f1);

EFFEVAL_API effeval_status effeval_pearson(const double* x, const double* y, size_t n, double* out);
EFFEVAL_API effeval_status effeval_kendall(const double* x, const double* y, size_t n, double* out);

EFFEVAL_API double effeval_default_grid_intensity(void);
EFFEVAL_API effeval_status effeval_carbon(double hours, double watts, double intensity,
                                          double* kg_co2);

/* EFEV containers. */
typedef struct effeval_container_info {
  uint16_t version;
  uint16_t flags;
  uint32_t dim;
  uint32_t segment_count;
  uint32_t crc;
  uint64_t payload_bytes;
  uint64_t total_tokens;
} effeval_container_info;

typedef struct effeval_container effeval_container;

EFFEVAL_API effeval_status effeval_container_open(const char* path, effeval_container** out);
EFFEVAL_API void effeval_container_close(effeval_container* container);
EFFEVAL_API size_t effeval_container_dim(const effeval_container* container);
EFFEVAL_API size_t effeval_container_segment_count(const effeval_container* container);
/* Decodes the next segment; *has_segment is 0 after the last one. */
EFFEVAL_API effeval_status effeval_container_next(effeval_container* container, int* has_segment);
EFFEVAL_API size_t effeval_container_token_count(const effeval_container* container);
EFFEVAL_API const char* effeval_container_token(const effeval_container* container, size_t index);
EFFEVAL_API const double* effeval_container_values(const effeval_container* container);

EFFEVAL_API effeval_status effeval_container_check(const char* path, effeval_container_info* info);

/* Optional consistency checks for fmt-check; NULL paths are skipped. */
EFFEVAL_API effeval_status effeval_check_alignment(const char* container_path,
                                                   const char* segments_path,
                                                   const char* manifest_path);

typedef struct effeval_container_writer effeval_container_writer;

EFFEVAL_API effeval_status effeval_container_writer_open(const char* path, size_t dim,
                                                         effeval_container_writer** out);
EFFEVAL_API effeval_status effeval_container_writer_add(effeval_container_writer* writer,
                                                        const char* const* tokens, size_t count,
                                                        const float* values);
/* Writes the trailer and frees the writer, also on failure. */
EFFEVAL_API effeval_status effeval_container_writer_finish(effeval_container_writer* writer);

/* Dataset scoring. Unused paths stay NULL. */
typedef struct effeval_score_options {
  effeval_metric metric;
  effeval_approx variant;
  effeval_measure measure;
  const char* segments;
  const char* hyp_emb;
  const char* ref_emb;
  const char* src_emb;
  const char* src_sent_emb;
  const char* hyp_sent_emb;
  const char* idf;
  const char* remap;
  const char* lm;
  size_t batch_size;
  size_t jobs;
  double w_dist;
  double w_lm;
  double sentsim_alpha; /* negative: plain mean */
} effeval_score_options;

EFFEVAL_API void effeval_score_options_init(effeval_score_options* options);

typedef struct effeval_scores effeval_scores;

EFFEVAL_API effeval_status effeval_score(const effeval_score_options* options,
                                         effeval_scores** out);
EFFEVAL_API void effeval_scores_free(effeval_scores* scores);
EFFEVAL_API size_t effeval_scores_count(const effeval_scores* scores);
EFFEVAL_API const char* effeval_scores_metric_id(const effeval_scores* scores);
EFFEVAL_API double effeval_scores_value(const effeval_scores* scores, size_t index);
EFFEVAL_API double effeval_scores_stage_ms(const effeval_scores* scores, effeval_stage stage);
/* "key\tvalue" lines with 17 significant digits. */
EFFEVAL_API effeval_status effeval_scores_render(const effeval_scores* scores, char** text);

/* Correlation against the human scores of a segments file. With
   scores_path NULL the scores are computed from `options`. */
typedef struct effeval_correlation effeval_correlation;

EFFEVAL_API effeval_status effeval_correlate(const char* segments_path, const char* scores_path,
                                             const effeval_score_options* options,
                                             int per_language, effeval_correlation** out);
EFFEVAL_API effeval_status effeval_correlate_arrays(const double* metric, const double* human,
                                                    const char* const* groups, size_t n,
                                                    int per_language, effeval_correlation** out);
EFFEVAL_API void effeval_correlation_free(effeval_correlation* report);
EFFEVAL_API size_t effeval_correlation_group_count(const effeval_correlation* report);
EFFEVAL_API const char* effeval_correlation_group_name(const effeval_correlation* report, size_t i);
EFFEVAL_API size_t effeval_correlation_group_size(const effeval_correlation* report, size_t i);
/* Returns 0 when the statistic is unavailable for the group. */
EFFEVAL_API int effeval_correlation_group_pearson(const effeval_correlation* report, size_t i,
                                                  double* out);
EFFEVAL_API int effeval_correlation_group_kendall(const effeval_correlation* report, size_t i,
                                                  double* out);
EFFEVAL_API const char* effeval_correlation_group_error(const effeval_correlation* report, size_t i);
EFFEVAL_API int effeval_correlation_pearson(const effeval_correlation* report, double* out);
EFFEVAL_API int effeval_correlation_kendall(const effeval_correlation* report, double* out);

/* Benchmarks. Timed runs always use a single worker. */
typedef struct effeval_report effeval_report;

EFFEVAL_API effeval_report* effeval_report_new(void);
EFFEVAL_API void effeval_report_free(effeval_report* report);
EFFEVAL_API size_t effeval_report_count(const effeval_report* report);
EFFEVAL_API double effeval_report_ms_per_segment(const effeval_report* report, size_t index);
EFFEVAL_API size_t effeval_report_batch_size(const effeval_report* report, size_t index);
EFFEVAL_API size_t effeval_report_runs(const effeval_report* report, size_t index);
/* Peak tracked bytes; 0 when the probe was unavailable. */
EFFEVAL_API uint64_t effeval_report_peak_bytes(const effeval_report* report, size_t index);
EFFEVAL_API double effeval_report_stage_ms(const effeval_report* report, size_t index,
                                           effeval_stage stage);
/* Appends a row given only its plotted quantities. */
EFFEVAL_API effeval_status effeval_report_add_point(effeval_report* report, const char* label,
                                                    double ms_per_segment, double pearson);
EFFEVAL_API effeval_status effeval_report_render(const effeval_report* report,
                                                 effeval_format format, char** text);

EFFEVAL_API effeval_status effeval_bench(const effeval_score_options* options,
                                         const char* dataset_id, size_t runs,
                                         effeval_report* report);
/* Fails with EFFEVAL_BATCH_VARIANCE if any size changes a score. */
EFFEVAL_API effeval_status effeval_sweep(const effeval_score_options* options,
                                         const char* dataset_id, const size_t* batch_sizes,
                                         size_t count, size_t runs, effeval_report* report);

/* Adapter accounting. family: "pfeiffer", "houlsby", "parallel",
   "compacter" or "ia3". */
typedef struct effeval_adapter_spec {
  const char* family;
  size_t hidden_dim;
  size_t bottleneck_dim;
  size_t layer_count;
  size_t ia3_vectors_per_layer;
  size_t phm_rank;
  int learned_residual;
} effeval_adapter_spec;

EFFEVAL_API void effeval_adapter_spec_init(effeval_adapter_spec* spec);
EFFEVAL_API effeval_status effeval_adapter_params(const effeval_adapter_spec* spec,
                                                  uint64_t* total, uint64_t* per_layer,
                                                  uint64_t* dense_baseline);
/* nonlinearity: 0 identity, 1 relu. */
EFFEVAL_API effeval_status effeval_adapter_grad_check(size_t hidden_dim, size_t bottleneck_dim,
                                                      int nonlinearity, uint64_t seed,
                                                      double* max_abs_error);

/* Writes a seeded synthetic dataset (segments, containers, idf, remap, lm,
   manifest) into `directory`. */
typedef struct effeval_synth_options {
  size_t segments;
  size_t min_tokens;
  size_t max_tokens;
  size_t dim;
  size_t vocabulary;
  uint64_t seed;
  const char* lang_pairs; /* comma separated */
} effeval_synth_options;

EFFEVAL_API void effeval_synth_options_init(effeval_synth_options* options);
EFFEVAL_API effeval_status effeval_synth(const char* directory, const effeval_synth_options* options);

/* Allocation accounting hooks, called by the operator new/delete
   replacement linked into executables. */
EFFEVAL_API void effeval_tracker_install(void);
EFFEVAL_API void effeval_tracker_note_alloc(size_t bytes);
EFFEVAL_API void effeval_tracker_note_free(size_t bytes);
EFFEVAL_API int effeval_tracker_installed(void);

#ifdef __cplusplus
}
#endif

#endif
