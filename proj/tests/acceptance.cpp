// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance                 run every criterion
//   acceptance --criterion N   run one
//   acceptance --list          print the criterion names

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "effeval/adapterlab.hpp"
#include "effeval/bench.hpp"
#include "effeval/ingest.hpp"
#include "effeval/metrics.hpp"
#include "effeval/scoring.hpp"
#include "effeval/stats.hpp"
#include "effeval/synthetic.hpp"
#include "effeval/transport.hpp"
#include "oracles/oracles.hpp"

using namespace effeval;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  const char* name;
  double budget_seconds;  // 0: no runtime bound
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("effeval-accept-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  fs::path operator/(const std::string& n) const { return path_ / n; }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& b) { std::ofstream(p, std::ios::binary | std::ios::trunc) << b; }

template <class Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

// ---------------------------------------------------------------------------

Outcome sandwich() {
  synthetic::Rng rng(42);
  std::uniform_int_distribution<int> tokens(1, 6);
  std::uniform_int_distribution<int> dims(1, 8);
  constexpr int kPairs = 1000;
  int low_violations = 0;   // wcd > rwmd
  int high_violations = 0;  // rwmd > wmd
  double worst = 0.0;
  for (int i = 0; i < kPairs; ++i) {
    const auto dim = static_cast<std::size_t>(dims(rng));
    const auto a = synthetic::random_document(rng, static_cast<std::size_t>(tokens(rng)), dim, true);
    const auto b = synthetic::random_document(rng, static_cast<std::size_t>(tokens(rng)), dim, true);
    const double w = transport::wcd(a, b);
    const double r = transport::rwmd(a, b);
    const double d = transport::wmd(a, b).distance;
    if (w > r + 1e-9) {
      ++low_violations;
      worst = std::max(worst, w - r);
    }
    if (r > d + 1e-9) ++high_violations;
  }
  std::string detail = std::to_string(kPairs) + " pairs: wcd>rwmd in " + std::to_string(low_violations) +
                       " (max excess " + fmt("%.3g", worst) + "), rwmd>wmd in " + std::to_string(high_violations);
  return {low_violations == 0 && high_violations == 0, detail};
}

Outcome exact_wmd() {
  synthetic::Rng rng(7);
  std::uniform_int_distribution<int> tokens(1, 4);
  std::uniform_int_distribution<std::int64_t> mass(1, 12);
  std::uniform_int_distribution<int> dims(1, 6);
  constexpr int kInstances = 200;
  double worst = 0.0;
  for (int i = 0; i < kInstances; ++i) {
    const auto n = static_cast<std::size_t>(tokens(rng));
    const auto m = static_cast<std::size_t>(tokens(rng));
    const auto dim = static_cast<std::size_t>(dims(rng));
    std::vector<std::int64_t> s(n);
    std::vector<std::int64_t> t(m);
    for (auto& v : s) v = mass(rng);
    for (auto& v : t) v = mass(rng);
    const auto ss = std::accumulate(s.begin(), s.end(), std::int64_t{0});
    const auto ts = std::accumulate(t.begin(), t.end(), std::int64_t{0});
    for (auto& v : s) v *= ts;
    for (auto& v : t) v *= ss;
    auto a = synthetic::random_document(rng, n, dim, false);
    auto b = synthetic::random_document(rng, m, dim, false);
    a.weights.assign(s.begin(), s.end());
    b.weights.assign(t.begin(), t.end());
    a = validate_document(a);
    b = validate_document(b);
    const auto cost = transport::cost_matrix(a.embedding, b.embedding, transport::Measure::kEuclidean);
    const double expected = oracle::min_cost_flow(s, t, cost.values());
    worst = std::max(worst, std::abs(transport::wmd(a, b).distance - expected));
  }
  return {worst <= 1e-9, std::to_string(kInstances) + " instances, max |simplex - oracle| = " + fmt("%.3g", worst)};
}

Outcome complexity() {
  const std::vector<std::size_t> n{16, 32, 64, 128, 256};
  const auto study = bench::scaling_study(n, 32, 42);
  bool wmd_slower = true;
  std::string times;
  for (const auto& p : study.points) {
    if (p.tokens >= 64 && p.wmd_ms < p.rwmd_ms) wmd_slower = false;
    times += " n=" + std::to_string(p.tokens) + ":" + fmt("%.3g", p.wcd_ms) + "/" + fmt("%.3g", p.rwmd_ms) + "/" +
             fmt("%.3g", p.wmd_ms);
  }
  const bool wcd_ok = std::abs(study.wcd_slope - 1.0) <= 0.5;
  const bool rwmd_ok = std::abs(study.rwmd_slope - 2.0) <= 0.5;
  return {wcd_ok && rwmd_ok && wmd_slower,
          "slopes wcd " + fmt("%.2f", study.wcd_slope) + ", rwmd " + fmt("%.2f", study.rwmd_slope) + ", wmd " +
              fmt("%.2f", study.wmd_slope) + "; wmd>=rwmd at n>=64: " + (wmd_slower ? "yes" : "no") +
              "; ms wcd/rwmd/wmd" + times};
}

Outcome stage_dominance() {
  TempDir dir;
  synthetic::DatasetOptions opt;
  opt.segments = 500;
  opt.dim = 768;
  opt.min_tokens = 15;
  opt.max_tokens = 30;
  opt.vocabulary = 2000;
  const auto paths = synthetic::write_dataset(synthetic::make_dataset(opt), dir.path());
  scoring::Inputs in;
  in.segments = paths.segments;
  in.hyp = paths.hyp;
  in.ref = paths.ref;
  in.idf = paths.idf;
  scoring::Options o;
  o.metric = scoring::MetricKind::kMover;
  bench::BenchmarkConfig cfg;
  cfg.metric_id = "moverscore-wmd";
  cfg.dataset_id = "synthetic-500";
  const auto rec = bench::time_metric([&](bench::StageRecorder& s) { (void)scoring::score(in, o, &s); },
                                      opt.segments, cfg);
  const double total_ms = rec.ms_per_segment * static_cast<double>(opt.segments);
  const double share = rec.stages[bench::Stage::kDistance] / total_ms;
  return {share < 0.20, "distance " + fmt("%.1f", rec.stages[bench::Stage::kDistance]) + " ms vs load " +
                            fmt("%.1f", rec.stages[bench::Stage::kLoadEmbeddings]) + " ms of " +
                            fmt("%.1f", total_ms) + " ms total; distance share " + fmt("%.1f%%", share * 100.0)};
}

Outcome carbon() {
  struct Case {
    double hours;
    double watts;
    double reference_kg;
  };
  const Case cases[] = {{71, bench::kGpuPowerWatts, 8.0}, {950, bench::kCpuPowerWatts, 5.4}, {45, bench::kCpuPowerWatts, 0.26}};
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    const double kg = bench::carbon_estimate(c.hours, {c.watts, bench::kUs2021GridIntensity});
    const double rel = std::abs(kg - c.reference_kg) / c.reference_kg;
    ok = ok && rel <= 0.05;
    detail += fmt("%.0f h", c.hours) + fmt(" %.0f W", c.watts) + fmt(" -> %.2f kg", kg) + fmt(" (reference %.2f,", c.reference_kg) +
              fmt(" %.1f%% off); ", rel * 100.0);
  }
  return {ok, detail};
}

Outcome correlation() {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> size(2, 50);
  std::uniform_int_distribution<int> level(0, 5);
  std::normal_distribution<double> gauss;
  double worst_p = 0.0;
  double worst_k = 0.0;
  int compared = 0;
  for (int t = 0; t < 200; ++t) {
    const auto n = static_cast<std::size_t>(size(rng));
    std::vector<double> x(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = t % 3 == 0 ? level(rng) : gauss(rng);
      y[i] = (t % 3 == 1 ? level(rng) : gauss(rng)) + 0.4 * x[i];
    }
    try {
      const double p = stats::pearson_r({x, y});
      const double k = stats::kendall_tau({x, y});
      worst_p = std::max(worst_p, std::abs(p - oracle::pearson_pairwise(x, y)));
      worst_k = std::max(worst_k, std::abs(k - oracle::kendall_tau_b(x, y)));
      ++compared;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kZeroVariance) throw;
    }
  }
  return {compared >= 190 && worst_p <= 1e-12 && worst_k <= 1e-12,
          std::to_string(compared) + " samples; max error pearson " + fmt("%.3g", worst_p) + ", kendall " +
              fmt("%.3g", worst_k)};
}

Outcome batch_invariance() {
  TempDir dir;
  synthetic::DatasetOptions opt;
  opt.segments = 20;
  opt.dim = 16;
  const auto paths = synthetic::write_dataset(synthetic::make_dataset(opt), dir.path());
  scoring::Inputs in;
  in.segments = paths.segments;
  in.hyp = paths.hyp;
  in.ref = paths.ref;
  in.src = paths.src;
  in.idf = paths.idf;
  in.remap = paths.remap;
  in.lm = paths.lm;
  double worst = 0.0;
  std::string detail;
  for (auto metric : {scoring::MetricKind::kGreedy, scoring::MetricKind::kMover, scoring::MetricKind::kXMover,
                      scoring::MetricKind::kSentSim}) {
    scoring::Options o;
    o.metric = metric;
    bench::BenchmarkConfig cfg;
    cfg.metric_id = std::string(scoring::metric_name(metric));
    const auto rows = bench::sweep_batch_size(
        [&](std::size_t size, bench::StageRecorder& s) {
          auto opts = o;
          opts.batch_size = size;
          return scoring::score(in, opts, &s).values;
        },
        opt.segments, bench::kDefaultBatchSizes, cfg);
    for (const auto& r : rows) worst = std::max(worst, r.max_deviation);
    detail += cfg.metric_id + " ";
  }
  return {worst <= 1e-9, detail + "at batch 1/4/16/64 on 20 segments; max deviation " + fmt("%.3g", worst)};
}

Outcome adapters() {
  using namespace adapterlab;
  bool ok = true;
  std::string detail;
  // bottleneck H=2 d=1, relu
  const Matrix down{1, 2, {1, 1}};
  const Matrix up{2, 1, {2, 3}};
  const std::vector<double> h{1, 2};
  const std::vector<double> r{1, 1};
  const bool fwd = bottleneck_forward(h, down, up, r, Nonlinearity::kRelu) == std::vector<double>{7, 10};
  const Matrix zero{1, 2, {0, 0}};
  const bool passthrough = bottleneck_forward(h, zero, up, r, Nonlinearity::kRelu) == r;
  const std::vector<double> x{1, 1};
  const std::vector<double> l{2, 3};
  const bool ia3 = ia3_forward(x, identity_matrix(2), l) == std::vector<double>{2, 3};
  const std::vector<double> ones{1, 1};
  const Matrix w{2, 2, {1, 2, 3, 4}};
  const bool ia3_unit = ia3_forward(x, w, ones) == std::vector<double>{3, 7};
  ok = fwd && passthrough && ia3 && ia3_unit;
  detail += std::string("forward examples ") + (ok ? "ok" : "FAILED");

  double worst = 0.0;
  for (auto nl : {Nonlinearity::kIdentity, Nonlinearity::kRelu}) {
    for (std::size_t hd = 1; hd <= 8; ++hd) {
      AdapterSpec s;
      s.hidden_dim = hd;
      s.bottleneck_dim = (hd + 1) / 2;
      s.nonlinearity = nl;
      worst = std::max(worst, grad_check_bottleneck(s, 42 + hd).max_abs_error);
    }
  }
  ok = ok && worst < 1e-6;
  detail += "; grad check max error " + fmt("%.3g", worst);

  bool ratio = true;
  for (std::size_t H : {16u, 768u, 1024u}) {
    for (std::size_t d : {8u, 48u}) {
      if (d > H) continue;
      AdapterSpec p;
      p.hidden_dim = H;
      p.bottleneck_dim = d;
      p.layer_count = 12;
      AdapterSpec hb = p;
      hb.family = Family::kHoulsby;
      ratio = ratio && trainable_param_count(hb).total == 2 * trainable_param_count(p).total;
    }
  }
  ok = ok && ratio;
  detail += std::string("; houlsby/pfeiffer = 2: ") + (ratio ? "yes" : "no");
  return {ok, detail};
}

std::string random_token(std::mt19937_64& rng) {
  static const char* pieces[] = {"a", "Zz", "é", "über", "中", "_", "9", "—"};
  std::string s;
  const auto n = rng() % 5;
  for (std::uint64_t i = 0; i < n; ++i) s += pieces[rng() % 8];
  return s;
}

Outcome formats() {
  TempDir dir;
  std::mt19937_64 rng(42);
  std::normal_distribution<float> gauss;
  int identical = 0;
  int total = 0;
  auto same = [&](const fs::path& a, const fs::path& b) {
    ++total;
    if (slurp(a) == slurp(b)) ++identical;
  };
  for (int i = 0; i < 50; ++i) {
    const std::size_t dim = 1 + rng() % 8;
    std::vector<ingest::ContainerSegment> segs(rng() % 6);
    for (auto& s : segs) {
      const std::size_t n = rng() % 7;
      std::vector<double> v(n * dim);
      for (auto& x : v) x = gauss(rng);
      for (std::size_t k = 0; k < n; ++k) s.tokens.push_back(random_token(rng));
      s.embedding = EmbeddingMatrix(n, dim, std::move(v));
    }
    ingest::write_container(segs, dim, dir / "a.efev");
    ingest::write_container(ingest::read_container(dir / "a.efev"), dim, dir / "b.efev");
    same(dir / "a.efev", dir / "b.efev");

    std::vector<double> proj(dim * dim);
    for (auto& x : proj) x = gauss(rng);
    std::optional<std::vector<double>> bias;
    if (i % 2) bias.emplace(dim, static_cast<double>(gauss(rng)));
    ingest::write_remap(metrics::RemapMatrix(dim, proj, bias), dir / "a.efrm");
    ingest::write_remap(ingest::read_remap(dir / "a.efrm"), dir / "b.efrm");
    same(dir / "a.efrm", dir / "b.efrm");

    std::vector<SegmentRecord> recs(rng() % 8);
    for (auto& r : recs) {
      r.lang_pair = (rng() % 2) ? "de-en" : "zh-en";
      r.system_id = "sys" + std::to_string(rng() % 4);
      r.source = random_token(rng);
      r.hypothesis = random_token(rng) + " " + random_token(rng);
      if (rng() % 2) r.reference = "ref " + random_token(rng);
      if (rng() % 2) r.human_score = gauss(rng) * 37.5;
    }
    ingest::write_segments(recs, dir / "a.tsv");
    ingest::write_segments(ingest::read_segments(dir / "a.tsv"), dir / "b.tsv");
    same(dir / "a.tsv", dir / "b.tsv");

    std::map<std::string, std::uint64_t> df;
    const std::uint64_t n_docs = 1 + rng() % 500;
    for (std::uint64_t k = rng() % 15; k > 0; --k) df[random_token(rng) + std::to_string(k)] = rng() % (n_docs + 1);
    ingest::write_idf(metrics::IdfTable(n_docs, df), dir / "a.json");
    ingest::write_idf(ingest::read_idf(dir / "a.json"), dir / "b.json");
    same(dir / "a.json", dir / "b.json");
  }

  // rejections
  const ingest::ContainerSegment seg{{"x", "y"}, EmbeddingMatrix(2, 2, {1, 2, 3, 4})};
  ingest::write_container({&seg, 1}, 2, dir / "c.efev");
  const auto good = slurp(dir / "c.efev");
  auto crc = good;
  crc[good.size() - 1] = static_cast<char>(crc[good.size() - 1] ^ 0x10);
  spit(dir / "crc.efev", crc);
  spit(dir / "trunc.efev", good.substr(0, good.size() - 3));
  ingest::write_remap(metrics::RemapMatrix::identity(3), dir / "c.efrm");
  const auto remap = slurp(dir / "c.efrm");
  auto remap_crc = remap;
  remap_crc[14] = static_cast<char>(remap_crc[14] ^ 0x01);
  spit(dir / "crc.efrm", remap_crc);
  spit(dir / "trunc.efrm", remap.substr(0, remap.size() - 5));
  const bool rejects =
      code_of([&] { (void)ingest::read_container(dir / "crc.efev"); }) == ErrorCode::kCrcMismatch &&
      code_of([&] { (void)ingest::read_container(dir / "trunc.efev"); }) == ErrorCode::kCrcMismatch &&
      code_of([&] { (void)ingest::read_remap(dir / "crc.efrm"); }) == ErrorCode::kCrcMismatch &&
      code_of([&] { (void)ingest::read_remap(dir / "trunc.efrm"); }) == ErrorCode::kCrcMismatch;
  return {identical == total && total == 200 && rejects,
          std::to_string(identical) + "/" + std::to_string(total) +
              " EFEV/EFRM/segments/IDF round trips byte-identical; corrupted CRC and truncation " +
              (rejects ? "rejected" : "NOT rejected")};
}

Outcome report_fidelity() {
  struct Point {
    double ms;
    double r;
    const char* label;
  };
  const Point points[] = {{422, 0.5856, "RoBERTa-large"}, {137, 0.5524, "BERT-base"},
                          {10.3, 0.4823, "BERT-tiny"},    {71.8, 0.5428, "DistilBERT"},
                          {15.8, 0.5300, "TinyBERT"},     {129, 0.5537, "DeeBERT-MNLI"}};
  const std::string expected =
      "x\ty\tlabel\n"
      "422\t0.5856\tRoBERTa-large\n"
      "137\t0.5524\tBERT-base\n"
      "10.3\t0.4823\tBERT-tiny\n"
      "71.8\t0.5428\tDistilBERT\n"
      "15.8\t0.5300\tTinyBERT\n"
      "129\t0.5537\tDeeBERT-MNLI\n";
  std::vector<bench::ReportEntry> entries;
  for (const auto& p : points) {
    bench::ReportEntry e;
    e.record.metric_id = "bertscore";
    e.record.ms_per_segment = p.ms;
    e.pearson = p.r;
    e.label = p.label;
    entries.push_back(e);
  }
  const auto out = bench::emit_report(entries, bench::ReportFormat::kPlotData);
  const bool deterministic = out == bench::emit_report(entries, bench::ReportFormat::kPlotData);
  return {out == expected && deterministic,
          out == expected ? "6 BERTScore coordinates reproduced verbatim" : "plotdata differs:\n" + out};
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"sandwich bound suite", 30, sandwich},
      {"exact WMD oracle", 60, exact_wmd},
      {"complexity ordering", 0, complexity},
      {"stage dominance", 0, stage_dominance},
      {"carbon arithmetic", 1, carbon},
      {"correlation oracles", 10, correlation},
      {"batch invariance", 0, batch_invariance},
      {"adapter math", 5, adapters},
      {"format round trips", 0, formats},
      {"report fidelity", 0, report_fidelity},
  };
  return all;
}

bool run_one(std::size_t index) {
  const auto& c = criteria()[index];
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = c.run();
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  bool pass = o.pass;
  std::string timing = fmt("%.2f s", seconds);
  if (c.budget_seconds > 0.0) {
    timing += fmt(", budget %.0f s", c.budget_seconds);
    pass = pass && seconds < c.budget_seconds;
  }
  std::printf("%s [%zu] %s: %s (%s)\n", pass ? "PASS" : "FAIL", index + 1, c.name, o.detail.c_str(), timing.c_str());
  std::fflush(stdout);
  return pass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::size_t only = 0;
  bool list = false;
  app.add_option("--criterion", only, "Run one criterion (1-based)")
      ->check(CLI::Range(std::size_t{1}, criteria().size()));
  app.add_flag("--list", list, "Print the criterion names");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (std::size_t i = 0; i < criteria().size(); ++i) std::printf("%zu\t%s\n", i + 1, criteria()[i].name);
    return 0;
  }
  if (only > 0) return run_one(only - 1) ? 0 : 1;
  int failed = 0;
  for (std::size_t i = 0; i < criteria().size(); ++i) failed += run_one(i) ? 0 : 1;
  return failed == 0 ? 0 : 1;
}
