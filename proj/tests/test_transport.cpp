#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "effeval/synthetic.hpp"
#include "effeval/transport.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace effeval;
using namespace effeval::transport;
using testing::doc;
using testing::rows;

namespace {

void check_plan(const WmdResult& r, const WeightedDocument& a, const WeightedDocument& b,
                const CostMatrix& c) {
  std::vector<double> row_sum(a.weights.size(), 0.0);
  std::vector<double> col_sum(b.weights.size(), 0.0);
  double objective = 0.0;
  for (const auto& f : r.plan.flows) {
    CHECK(f.mass >= 0.0);
    row_sum[f.source] += f.mass;
    col_sum[f.target] += f.mass;
    objective += f.mass * c(f.source, f.target);
  }
  for (std::size_t i = 0; i < row_sum.size(); ++i) CHECK(std::abs(row_sum[i] - a.weights[i]) <= 1e-9);
  for (std::size_t j = 0; j < col_sum.size(); ++j) CHECK(std::abs(col_sum[j] - b.weights[j]) <= 1e-9);
  CHECK(std::abs(objective - r.distance) <= 1e-9 * std::max(1.0, r.distance));
}

// Random feasible plan: northwest-corner rule on shuffled row and column orders.
double random_plan_cost(synthetic::Rng& rng, const WeightedDocument& a, const WeightedDocument& b,
                        const CostMatrix& c) {
  std::vector<std::size_t> ri(a.weights.size());
  std::vector<std::size_t> ci(b.weights.size());
  std::iota(ri.begin(), ri.end(), 0);
  std::iota(ci.begin(), ci.end(), 0);
  std::shuffle(ri.begin(), ri.end(), rng);
  std::shuffle(ci.begin(), ci.end(), rng);
  std::vector<double> s(a.weights);
  std::vector<double> d(b.weights);
  double cost = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < ri.size() && j < ci.size()) {
    const double m = std::min(s[ri[i]], d[ci[j]]);
    cost += m * c(ri[i], ci[j]);
    s[ri[i]] -= m;
    d[ci[j]] -= m;
    if (s[ri[i]] <= d[ci[j]]) {
      ++i;
    } else {
      ++j;
    }
  }
  return cost;
}

}  // namespace

TEST_SUITE("transport") {
  TEST_CASE("cost matrix examples") {
    auto c = cost_matrix(rows({{0, 0}}), rows({{3, 4}}), Measure::kEuclidean);
    CHECK(c(0, 0) == 5.0);
    auto cos = cost_matrix(rows({{1, 0}}), rows({{1, 0}}), Measure::kCosineDistance);
    CHECK(cos(0, 0) == 0.0);
    auto two = cost_matrix(rows({{1, 0}, {0, 1}}), rows({{1, 1}}), Measure::kEuclidean);
    CHECK(two.rows() == 2);
    CHECK(two.cols() == 1);
    CHECK(two(0, 0) == 1.0);
    CHECK(two(1, 0) == 1.0);
    CHECK_ERROR(cost_matrix(rows({{1, 0}}), rows({{1, 0, 0}}), Measure::kEuclidean),
                ErrorCode::kDimensionMismatch);
    CHECK_ERROR(cost_matrix(rows({{0, 0}}), rows({{1, 0}}), Measure::kCosineDistance),
                ErrorCode::kZeroVector);
  }

  TEST_CASE("cost entries match recomputation") {
    synthetic::Rng rng(3);
    const auto a = synthetic::random_document(rng, 5, 4, false);
    const auto b = synthetic::random_document(rng, 6, 4, false);
    const auto c = cost_matrix(a.embedding, b.embedding, Measure::kEuclidean);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 6; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < 4; ++k) {
          const double d = a.embedding.row(i)[k] - b.embedding.row(j)[k];
          s += d * d;
        }
        CHECK(std::abs(c(i, j) - std::sqrt(s)) <= 1e-12);
        CHECK(c(i, j) >= 0.0);
      }
    }
  }

  TEST_CASE("wmd examples") {
    CHECK(wmd(doc({{0, 0}}), doc({{3, 4}})).distance == doctest::Approx(5.0).epsilon(1e-12));
    const auto a = doc({{0.3, -1}, {2, 5}, {1, 1}}, {1, 2, 3});
    CHECK(wmd(a, a).distance <= 1e-12);
    CHECK(wmd(doc({{0, 0}, {1, 0}}), doc({{0, 1}, {1, 1}})).distance == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("rwmd and wcd examples") {
    const auto a = doc({{0.3, -1}, {2, 5}, {1, 1}}, {1, 2, 3});
    CHECK(rwmd(a, a) <= 1e-12);
    CHECK(wcd(a, a) <= 1e-12);
    CHECK(wcd(doc({{0, 0}, {2, 0}}), doc({{1, 1}})) == doctest::Approx(1.0).epsilon(1e-12));
    synthetic::Rng rng(11);
    for (int t = 0; t < 50; ++t) {
      const auto x = synthetic::random_document(rng, 1 + t % 6, 3, true);
      const auto y = synthetic::random_document(rng, 1, 3, true);
      CHECK(rwmd(x, y) == doctest::Approx(wmd(x, y).distance).epsilon(1e-12));
    }
  }

  TEST_CASE("wmd matches the min-cost-flow oracle on random 3x4 instances") {
    synthetic::Rng rng(2024);
    std::uniform_int_distribution<std::int64_t> unit(1, 9);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<std::int64_t> s(3);
      std::vector<std::int64_t> d(4);
      for (auto& v : s) v = unit(rng);
      for (auto& v : d) v = unit(rng);
      // common total: scale each side by the other's sum
      const auto ss = std::accumulate(s.begin(), s.end(), std::int64_t{0});
      const auto ds = std::accumulate(d.begin(), d.end(), std::int64_t{0});
      for (auto& v : s) v *= ds;
      for (auto& v : d) v *= ss;
      auto a = synthetic::random_document(rng, 3, 5, false);
      auto b = synthetic::random_document(rng, 4, 5, false);
      a.weights.assign(s.begin(), s.end());
      b.weights.assign(d.begin(), d.end());
      a = validate_document(a);
      b = validate_document(b);
      const auto c = cost_matrix(a.embedding, b.embedding, Measure::kEuclidean);
      const auto r = wmd(a, b);
      CHECK(std::abs(r.distance - oracle::min_cost_flow(s, d, c.values())) <= 1e-9);
      check_plan(r, a, b, c);
    }
  }

  TEST_CASE("true bounds, symmetry and plan feasibility on random instances") {
    synthetic::Rng rng(99);
    std::uniform_int_distribution<int> tokens(1, 6);
    std::uniform_int_distribution<int> dims(1, 8);
    for (int trial = 0; trial < 1000; ++trial) {
      const auto dim = static_cast<std::size_t>(dims(rng));
      const auto a = synthetic::random_document(rng, static_cast<std::size_t>(tokens(rng)), dim, true);
      const auto b = synthetic::random_document(rng, static_cast<std::size_t>(tokens(rng)), dim, true);
      const auto ab = wmd(a, b);
      const auto ba = wmd(b, a);
      const double r = rwmd(a, b);
      const double w = wcd(a, b);
      CHECK(r <= ab.distance + 1e-9);
      CHECK(w <= ab.distance + 1e-9);
      CHECK(std::abs(ab.distance - ba.distance) <= 1e-9);
      CHECK(std::abs(r - rwmd(b, a)) <= 1e-9);
      CHECK(std::abs(w - wcd(b, a)) <= 1e-9);
      check_plan(ab, a, b, cost_matrix(a.embedding, b.embedding, Measure::kEuclidean));
    }
  }

  TEST_CASE("wcd can exceed rwmd") {
    // RWMD: every token has an exact match on the other side, so both relaxations are 0.
    // WCD: centroids 0 and 0.8 apart.
    const auto a = doc({{-1}, {1}});
    const auto b = doc({{-1}, {1}}, {0.9, 0.1});
    CHECK(rwmd(a, b) == 0.0);
    CHECK(wcd(a, b) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(wmd(a, b).distance == doctest::Approx(0.8).epsilon(1e-12));
  }

  TEST_CASE("wmd is no worse than random feasible plans") {
    synthetic::Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      const auto a = synthetic::random_document(rng, 5, 3, true);
      const auto b = synthetic::random_document(rng, 4, 3, true);
      const auto c = cost_matrix(a.embedding, b.embedding, Measure::kEuclidean);
      const double best = wmd(a, b).distance;
      for (int k = 0; k < 100; ++k) CHECK(best <= random_plan_cost(rng, a, b, c) + 1e-12);
    }
  }

  TEST_CASE("scaling embeddings scales euclidean distances") {
    synthetic::Rng rng(8);
    const auto a = synthetic::random_document(rng, 4, 3, true);
    const auto b = synthetic::random_document(rng, 5, 3, true);
    auto scale = [](WeightedDocument d, double c) {
      d.embedding = d.embedding.scaled(c);
      return d;
    };
    const auto a3 = scale(a, 3.0);
    const auto b3 = scale(b, 3.0);
    CHECK(wmd(a3, b3).distance == doctest::Approx(3.0 * wmd(a, b).distance).epsilon(1e-12));
    CHECK(rwmd(a3, b3) == doctest::Approx(3.0 * rwmd(a, b)).epsilon(1e-12));
    CHECK(wcd(a3, b3) == doctest::Approx(3.0 * wcd(a, b)).epsilon(1e-12));
  }

  TEST_CASE("unvalidated documents are refused") {
    WeightedDocument raw{{"a"}, {2.0}, rows({{1}})};
    CHECK(testing::error_of([&] { (void)wmd(raw, raw); }) != ErrorCode::kOk);
  }

  TEST_CASE("degenerate supplies") {
    // ties and zero costs exercise degenerate pivots
    const auto a = doc({{0}, {0}, {0}, {1}});
    const auto b = doc({{0}, {1}, {1}, {1}});
    CHECK(wmd(a, b).distance == doctest::Approx(0.5).epsilon(1e-12));
  }
}
