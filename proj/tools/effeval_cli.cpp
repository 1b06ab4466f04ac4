#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "effeval/effeval.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

bool use_color() {
  return std::getenv("EFFEVAL_NO_COLOR") == nullptr && isatty(fileno(stderr)) != 0;
}

int report_error(const std::string& message, int code) {
  if (use_color()) {
    std::cerr << "\033[1;31merror:\033[0m " << message << '\n';
  } else {
    std::cerr << "error: " << message << '\n';
  }
  return code;
}

int fail(effeval_status status) {
  return report_error(std::string(effeval_status_name(status)) + " - " + effeval_last_error(),
                      status == EFFEVAL_INVALID_ARGUMENT ? kExitUsage : kExitData);
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Output {
  std::string path;

  // Writes to the file when a path was given, stdout otherwise.
  int write(const std::string& text) const {
    if (path.empty()) {
      std::cout << text;
      std::cout.flush();
      return std::cout ? kExitOk : kExitData;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) return report_error("cannot write '" + path + "'", kExitData);
    return kExitOk;
  }
};

struct OwnedText {
  char* text = nullptr;
  ~OwnedText() { effeval_string_free(text); }
};

// Flags shared by every subcommand that scores a dataset.
struct ScoreFlags {
  std::string segments, hyp, ref, src, src_sent, hyp_sent, idf, remap, lm;
  std::string metric = "greedy";
  std::string variant = "wmd";
  std::string measure = "euclidean";
  std::size_t batch = 1;
  std::size_t jobs = 1;
  double w_dist = 1.0;
  double w_lm = 0.1;
  std::optional<double> sentsim_alpha;

  void attach(CLI::App& cmd, bool with_batch, bool with_jobs) {
    cmd.add_option("--segments", segments, "Segments TSV (6 columns); checked against the containers")
        ->check(CLI::ExistingFile);
    cmd.add_option("--hyp-emb", hyp, "Hypothesis EFEV container")->check(CLI::ExistingFile);
    cmd.add_option("--ref-emb", ref, "Reference EFEV container")->check(CLI::ExistingFile);
    cmd.add_option("--src-emb", src, "Source EFEV container (xmover, sentsim)")->check(CLI::ExistingFile);
    cmd.add_option("--src-sent", src_sent, "Source sentence-vector container, one row per segment (sentsim)")
        ->check(CLI::ExistingFile);
    cmd.add_option("--hyp-sent", hyp_sent, "Hypothesis sentence-vector container, one row per segment (sentsim)")
        ->check(CLI::ExistingFile);
    cmd.add_option("--idf", idf, "IDF statistics JSON (required by mover, optional for greedy)")
        ->check(CLI::ExistingFile);
    cmd.add_option("--remap", remap, "EFRM remap matrix applied to the source side")->check(CLI::ExistingFile);
    cmd.add_option("--lm", lm, "LM penalty TSV keyed by segment (xmover)")->check(CLI::ExistingFile);
    cmd.add_option("--metric", metric, "Metric family")
        ->check(CLI::IsMember({"greedy", "mover", "xmover", "sentsim"}))
        ->capture_default_str();
    cmd.add_option("--variant", variant, "Transport distance for mover/xmover")
        ->check(CLI::IsMember({"wmd", "rwmd", "wcd"}))
        ->capture_default_str();
    cmd.add_option("--measure", measure, "Ground cost for xmover (mover is always euclidean)")
        ->check(CLI::IsMember({"euclidean", "cosine"}))
        ->capture_default_str();
    if (with_batch) {
      cmd.add_option("--batch", batch, "Segments loaded and scored per batch")
          ->check(CLI::PositiveNumber)
          ->capture_default_str();
    }
    if (with_jobs) {
      cmd.add_option("--jobs", jobs, "Worker threads per batch")->check(CLI::PositiveNumber)->capture_default_str();
    }
    cmd.add_option("--w-dist", w_dist, "xmover weight of the negated distance")->capture_default_str();
    cmd.add_option("--w-lm", w_lm, "xmover weight of the LM score")->capture_default_str();
    cmd.add_option("--sentsim-alpha", sentsim_alpha,
                   "sentsim weight of the sentence cosine; plain mean when omitted")
        ->check(CLI::Range(0.0, 1.0));
  }

  std::optional<std::string> missing() const {
    std::vector<std::pair<const std::string*, const char*>> need;
    if (metric == "greedy") need = {{&hyp, "--hyp-emb"}, {&ref, "--ref-emb"}};
    if (metric == "mover") need = {{&hyp, "--hyp-emb"}, {&ref, "--ref-emb"}, {&idf, "--idf"}};
    if (metric == "xmover" || metric == "sentsim") need = {{&src, "--src-emb"}, {&hyp, "--hyp-emb"}};
    std::string names;
    for (const auto& [value, flag] : need) {
      if (value->empty()) names += (names.empty() ? "" : ", ") + std::string(flag);
    }
    if (names.empty()) return std::nullopt;
    return "--metric " + metric + " requires " + names;
  }

  effeval_score_options options() const {
    effeval_score_options o;
    effeval_score_options_init(&o);
    static const std::map<std::string, effeval_metric> metrics{{"greedy", EFFEVAL_METRIC_GREEDY},
                                                               {"mover", EFFEVAL_METRIC_MOVER},
                                                               {"xmover", EFFEVAL_METRIC_XMOVER},
                                                               {"sentsim", EFFEVAL_METRIC_SENTSIM}};
    static const std::map<std::string, effeval_approx> variants{
        {"wmd", EFFEVAL_APPROX_WMD}, {"rwmd", EFFEVAL_APPROX_RWMD}, {"wcd", EFFEVAL_APPROX_WCD}};
    o.metric = metrics.at(metric);
    o.variant = variants.at(variant);
    o.measure = measure == "cosine" ? EFFEVAL_MEASURE_COSINE : EFFEVAL_MEASURE_EUCLIDEAN;
    auto c = [](const std::string& s) { return s.empty() ? nullptr : s.c_str(); };
    o.segments = c(segments);
    o.hyp_emb = c(hyp);
    o.ref_emb = c(ref);
    o.src_emb = c(src);
    o.src_sent_emb = c(src_sent);
    o.hyp_sent_emb = c(hyp_sent);
    o.idf = c(idf);
    o.remap = c(remap);
    o.lm = c(lm);
    o.batch_size = batch;
    o.jobs = jobs;
    o.w_dist = w_dist;
    o.w_lm = w_lm;
    o.sentsim_alpha = sentsim_alpha.value_or(-1.0);
    return o;
  }
};

effeval_format parse_format(const std::string& name) {
  if (name == "markdown") return EFFEVAL_FORMAT_MARKDOWN;
  if (name == "plotdata") return EFFEVAL_FORMAT_PLOTDATA;
  return EFFEVAL_FORMAT_CSV;
}

int render_report(const effeval_report* report, const std::string& format, const Output& out) {
  OwnedText text;
  if (auto s = effeval_report_render(report, parse_format(format), &text.text); s != EFFEVAL_OK) {
    return fail(s);
  }
  return out.write(text.text);
}

int run_score(const ScoreFlags& flags, const Output& out) {
  if (auto m = flags.missing()) return report_error(*m, kExitUsage);
  const auto options = flags.options();
  effeval_scores* scores = nullptr;
  if (auto s = effeval_score(&options, &scores); s != EFFEVAL_OK) return fail(s);
  std::unique_ptr<effeval_scores, decltype(&effeval_scores_free)> guard(scores, effeval_scores_free);
  OwnedText text;
  if (auto s = effeval_scores_render(scores, &text.text); s != EFFEVAL_OK) return fail(s);
  return out.write(text.text);
}

int run_correlate(const ScoreFlags& flags, const std::string& scores_path, const std::string& agg,
                  const Output& out) {
  if (flags.segments.empty()) return report_error("correlate requires --segments", kExitUsage);
  if (scores_path.empty()) {
    if (auto m = flags.missing()) return report_error(*m + " (or pass --scores)", kExitUsage);
  }
  const auto options = flags.options();
  effeval_correlation* report = nullptr;
  const auto status = effeval_correlate(flags.segments.c_str(),
                                        scores_path.empty() ? nullptr : scores_path.c_str(), &options,
                                        agg == "perlang" ? 1 : 0, &report);
  if (status != EFFEVAL_OK) return fail(status);
  std::unique_ptr<effeval_correlation, decltype(&effeval_correlation_free)> guard(report,
                                                                                effeval_correlation_free);
  std::string text = "# aggregation\t" + agg + "\n";
  text += "group\tn\tpearson\tkendall\terror\n";
  bool any_error = false;
  for (std::size_t i = 0; i < effeval_correlation_group_count(report); ++i) {
    double p = 0.0;
    double k = 0.0;
    const bool has_p = effeval_correlation_group_pearson(report, i, &p) != 0;
    const bool has_k = effeval_correlation_group_kendall(report, i, &k) != 0;
    const std::string error = effeval_correlation_group_error(report, i);
    any_error = any_error || !error.empty();
    text += std::string(effeval_correlation_group_name(report, i)) + '\t' +
            std::to_string(effeval_correlation_group_size(report, i)) + '\t' + (has_p ? fmt17(p) : "") +
            '\t' + (has_k ? fmt17(k) : "") + '\t' + error + '\n';
  }
  double p = 0.0;
  double k = 0.0;
  const bool has_p = effeval_correlation_pearson(report, &p) != 0;
  const bool has_k = effeval_correlation_kendall(report, &k) != 0;
  text += std::string("pearson\t") + (has_p ? fmt17(p) : "") + '\n';
  text += std::string("kendall\t") + (has_k ? fmt17(k) : "") + '\n';
  if (const int rc = out.write(text); rc != kExitOk) return rc;
  if (any_error) {
    for (std::size_t i = 0; i < effeval_correlation_group_count(report); ++i) {
      const std::string error = effeval_correlation_group_error(report, i);
      if (!error.empty()) {
        report_error(std::string("group ") + effeval_correlation_group_name(report, i) + ": " + error, 0);
      }
    }
  }
  return has_p || has_k ? kExitOk : kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Efficiency-aware evaluation of token-matching MT metrics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(effeval_version()), "Print the library version");

  std::string out_path;
  std::string format = "csv";
  auto add_out = [&](CLI::App* cmd, const char* what) {
    cmd->add_option("--out", out_path, what);
  };
  auto add_format = [&](CLI::App* cmd) {
    cmd->add_option("--format", format, "Report format")
        ->check(CLI::IsMember({"csv", "markdown", "plotdata"}))
        ->capture_default_str();
  };

  // score
  ScoreFlags score_flags;
  auto* score = app.add_subcommand("score", "Score every segment; writes key<TAB>value lines");
  score_flags.attach(*score, true, true);
  add_out(score, "Output file (stdout when omitted)");

  // correlate
  ScoreFlags corr_flags;
  std::string scores_path;
  std::string agg = "pooled";
  auto* correlate = app.add_subcommand("correlate", "Pearson r and Kendall tau-b against human scores");
  corr_flags.attach(*correlate, true, true);
  correlate->add_option("--scores", scores_path, "Precomputed scores TSV from `score`; skips scoring")
      ->check(CLI::ExistingFile);
  correlate->add_option("--agg", agg, "pooled: all segments at once; perlang: mean over language pairs")
      ->check(CLI::IsMember({"pooled", "perlang"}))
      ->capture_default_str();
  add_out(correlate, "Output file (stdout when omitted)");

  // bench
  ScoreFlags bench_flags;
  std::size_t runs = 3;
  std::string dataset_id = "dataset";
  auto* bench = app.add_subcommand("bench", "Time a metric: warm-up plus N measured single-worker runs");
  bench_flags.attach(*bench, true, false);
  bench->add_option("--runs", runs, "Measured runs (at least 3)")->check(CLI::Range(3, 1000000))->capture_default_str();
  bench->add_option("--dataset", dataset_id, "Dataset label in the report")->capture_default_str();
  add_format(bench);
  add_out(bench, "Report file (stdout when omitted)");

  // sweep
  ScoreFlags sweep_flags;
  std::vector<std::size_t> sweep_sizes{1, 4, 16, 64};
  std::size_t sweep_runs = 3;
  std::string sweep_dataset = "dataset";
  auto* sweep = app.add_subcommand("sweep", "Benchmark several batch sizes and check scores stay identical");
  sweep_flags.attach(*sweep, false, false);
  sweep->add_option("--batch", sweep_sizes, "Batch sizes to sweep")
      ->check(CLI::PositiveNumber)
      ->delimiter(',')
      ->capture_default_str();
  sweep->add_option("--runs", sweep_runs, "Measured runs per batch size (at least 3)")
      ->check(CLI::Range(3, 1000000))
      ->capture_default_str();
  sweep->add_option("--dataset", sweep_dataset, "Dataset label in the report")->capture_default_str();
  add_format(sweep);
  add_out(sweep, "Report file (stdout when omitted)");

  // carbon
  double hours = 0.0;
  double watts = 0.0;
  double intensity = effeval_default_grid_intensity();
  auto* carbon = app.add_subcommand("carbon", "kg CO2-eq = hours x kW x grid intensity");
  carbon->add_option("--hours", hours, "Runtime in hours")->required();
  carbon->add_option("--watts", watts, "Power draw in watts")->required();
  carbon->add_option("--intensity", intensity, "Grid carbon intensity in kg CO2-eq per kWh")
      ->capture_default_str();

  // adapterlab
  std::string family = "all";
  std::size_t hidden = 768;
  std::size_t bottleneck = 48;
  std::size_t layers = 12;
  std::size_t ia3_vectors = 3;
  std::size_t phm_rank = 4;
  bool learned_residual = false;
  bool grad_check = false;
  std::uint64_t seed = 42;
  auto* adapter = app.add_subcommand("adapterlab", "Trainable-parameter table for adapter families");
  adapter->add_option("--family", family, "pfeiffer, houlsby, parallel, compacter, ia3 or all")
      ->check(CLI::IsMember({"all", "pfeiffer", "houlsby", "parallel", "compacter", "ia3"}))
      ->capture_default_str();
  adapter->add_option("--hidden", hidden, "Hidden size H")->check(CLI::PositiveNumber)->capture_default_str();
  adapter->add_option("--bottleneck", bottleneck, "Bottleneck size d (d <= H)")->capture_default_str();
  adapter->add_option("--layers", layers, "Layer count L")->check(CLI::PositiveNumber)->capture_default_str();
  adapter->add_option("--ia3-vectors", ia3_vectors, "Learned ia3 scaling vectors per layer")
      ->capture_default_str();
  adapter->add_option("--phm-rank", phm_rank, "Kronecker factor size n for compacter accounting")
      ->capture_default_str();
  adapter->add_flag("--learned-residual", learned_residual, "Count the residual r as a learned H-vector");
  adapter->add_flag("--grad-check", grad_check,
                    "Also run the finite-difference gradient check (identity and relu)");
  adapter->add_option("--seed", seed, "Random seed for the gradient check")->capture_default_str();

  // fmt-check
  std::vector<std::string> check_files;
  std::string check_segments;
  std::string check_manifest;
  auto* fmt = app.add_subcommand("fmt-check", "Validate EFEV containers (header, CRC, layout, values)");
  fmt->add_option("files", check_files, "Containers to check")->required()->check(CLI::ExistingFile);
  fmt->add_option("--segments", check_segments, "Segments TSV whose record count must match")
      ->check(CLI::ExistingFile);
  fmt->add_option("--manifest", check_manifest, "Sidecar manifest whose alignment must match")
      ->check(CLI::ExistingFile);

  // synth
  std::string synth_dir;
  effeval_synth_options synth_options;
  effeval_synth_options_init(&synth_options);
  std::string lang_pairs = synth_options.lang_pairs;
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic dataset (segments, containers, idf, remap, lm)");
  synth->add_option("--out", synth_dir, "Output directory")->required();
  synth->add_option("--count", synth_options.segments, "Number of segments")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--dim", synth_options.dim, "Embedding dimension")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--min-tokens", synth_options.min_tokens, "Shortest segment in tokens")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--max-tokens", synth_options.max_tokens, "Longest segment in tokens")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--vocab", synth_options.vocabulary, "Vocabulary size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--lang-pairs", lang_pairs, "Comma-separated language pairs")->capture_default_str();
  synth->add_option("--seed", synth_options.seed, "Random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const Output out{out_path};

  if (score->parsed()) return run_score(score_flags, out);
  if (correlate->parsed()) return run_correlate(corr_flags, scores_path, agg, out);

  if (bench->parsed()) {
    if (auto m = bench_flags.missing()) return report_error(*m, kExitUsage);
    const auto options = bench_flags.options();
    std::unique_ptr<effeval_report, decltype(&effeval_report_free)> report(effeval_report_new(),
                                                                          effeval_report_free);
    if (auto s = effeval_bench(&options, dataset_id.c_str(), runs, report.get()); s != EFFEVAL_OK) {
      return fail(s);
    }
    return render_report(report.get(), format, out);
  }

  if (sweep->parsed()) {
    if (auto m = sweep_flags.missing()) return report_error(*m, kExitUsage);
    const auto options = sweep_flags.options();
    std::unique_ptr<effeval_report, decltype(&effeval_report_free)> report(effeval_report_new(),
                                                                          effeval_report_free);
    const auto s = effeval_sweep(&options, sweep_dataset.c_str(), sweep_sizes.data(), sweep_sizes.size(),
                                 sweep_runs, report.get());
    if (s != EFFEVAL_OK) return fail(s);
    return render_report(report.get(), format, out);
  }

  if (carbon->parsed()) {
    double kg = 0.0;
    if (auto s = effeval_carbon(hours, watts, intensity, &kg); s != EFFEVAL_OK) {
      return report_error(std::string(effeval_status_name(s)) + " - " + effeval_last_error(), kExitUsage);
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f\n", kg);
    return Output{}.write(buf);
  }

  if (adapter->parsed()) {
    std::vector<std::string> families{"pfeiffer", "houlsby", "parallel", "compacter", "ia3"};
    if (family != "all") families = {family};
    std::string text = "family\thidden\tbottleneck\tlayers\tper_layer\ttotal\tdense_baseline\tfraction\n";
    for (const auto& f : families) {
      effeval_adapter_spec spec;
      effeval_adapter_spec_init(&spec);
      spec.family = f.c_str();
      spec.hidden_dim = hidden;
      spec.bottleneck_dim = bottleneck;
      spec.layer_count = layers;
      spec.ia3_vectors_per_layer = ia3_vectors;
      spec.phm_rank = phm_rank;
      spec.learned_residual = learned_residual ? 1 : 0;
      std::uint64_t total = 0;
      std::uint64_t per_layer = 0;
      std::uint64_t dense = 0;
      if (auto s = effeval_adapter_params(&spec, &total, &per_layer, &dense); s != EFFEVAL_OK) return fail(s);
      char frac[64];
      std::snprintf(frac, sizeof(frac), "%.6g", static_cast<double>(total) / static_cast<double>(dense));
      text += f + '\t' + std::to_string(hidden) + '\t' + (f == "ia3" ? "-" : std::to_string(bottleneck)) +
              '\t' + std::to_string(layers) + '\t' + std::to_string(per_layer) + '\t' +
              std::to_string(total) + '\t' + std::to_string(dense) + '\t' + frac + '\n';
    }
    if (grad_check) {
      // the check runs at toy scale regardless of the table's dimensions
      const std::size_t h = std::min<std::size_t>(hidden, 8);
      const std::size_t d = std::min<std::size_t>(std::max<std::size_t>(bottleneck, 1), h);
      for (int nl : {0, 1}) {
        double err = 0.0;
        if (auto s = effeval_adapter_grad_check(h, d, nl, seed, &err); s != EFFEVAL_OK) return fail(s);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.3g", err);
        text += std::string("grad_check\t") + (nl ? "relu" : "identity") + "\tH=" + std::to_string(h) +
                "\td=" + std::to_string(d) + "\tmax_abs_error=" + buf + '\n';
      }
    }
    return Output{}.write(text);
  }

  if (fmt->parsed()) {
    int rc = kExitOk;
    std::string text;
    for (const auto& file : check_files) {
      effeval_container_info info{};
      auto s = effeval_container_check(file.c_str(), &info);
      if (s == EFFEVAL_OK && (!check_segments.empty() || !check_manifest.empty())) {
        s = effeval_check_alignment(file.c_str(), check_segments.empty() ? nullptr : check_segments.c_str(),
                                    check_manifest.empty() ? nullptr : check_manifest.c_str());
      }
      if (s != EFFEVAL_OK) {
        text += file + "\tFAIL\t" + effeval_status_name(s) + '\n';
        report_error(file + ": " + effeval_last_error(), 0);
        rc = kExitData;
        continue;
      }
      char crc[16];
      std::snprintf(crc, sizeof(crc), "%08x", info.crc);
      text += file + "\tOK\tversion=" + std::to_string(info.version) + "\tdim=" + std::to_string(info.dim) +
              "\tsegments=" + std::to_string(info.segment_count) +
              "\ttokens=" + std::to_string(info.total_tokens) + "\tcrc=" + crc + '\n';
    }
    std::cout << text;
    return rc;
  }

  if (synth->parsed()) {
    synth_options.lang_pairs = lang_pairs.c_str();
    if (auto s = effeval_synth(synth_dir.c_str(), &synth_options); s != EFFEVAL_OK) return fail(s);
    std::cout << synth_dir << '\n';
    return kExitOk;
  }
  return kExitUsage;
}
