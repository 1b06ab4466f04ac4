#include <cmath>
#include <limits>
#include <numeric>

#include "effeval/core.hpp"
#include "effeval/synthetic.hpp"
#include "support.hpp"

using namespace effeval;
using testing::rows;

TEST_SUITE("core") {
  TEST_CASE("zero-weight tokens and their rows are dropped") {
    WeightedDocument d{{"a", "b"}, {1.0, 0.0}, rows({{1, 2}, {3, 4}})};
    const auto v = validate_document(d);
    CHECK(v.tokens == std::vector<std::string>{"a"});
    CHECK(v.weights == std::vector<double>{1.0});
    CHECK(v.embedding.rows() == 1);
    CHECK(v.embedding.values()[0] == 1.0);
    CHECK(v.embedding.values()[1] == 2.0);
  }

  TEST_CASE("weights are normalized") {
    WeightedDocument d{{"a", "b"}, {2.0, 2.0}, rows({{1}, {2}})};
    CHECK(validate_document(d).weights == std::vector<double>{0.5, 0.5});
  }

  TEST_CASE("degenerate and malformed documents are rejected") {
    WeightedDocument empty{{}, {}, EmbeddingMatrix(0, 3, {})};
    CHECK_ERROR(validate_document(empty), ErrorCode::kEmptyDocument);
    WeightedDocument zero{{"a"}, {0.0}, rows({{1}})};
    CHECK_ERROR(validate_document(zero), ErrorCode::kEmptyDocument);
    WeightedDocument mismatched{{"a", "b"}, {1.0, 1.0}, rows({{1}})};
    CHECK_ERROR(validate_document(mismatched), ErrorCode::kDimensionMismatch);
    WeightedDocument nan_weight{{"a"}, {std::numeric_limits<double>::quiet_NaN()}, rows({{1}})};
    CHECK_ERROR(validate_document(nan_weight), ErrorCode::kNonFiniteValue);
    CHECK_ERROR(EmbeddingMatrix(1, 1, {std::numeric_limits<double>::infinity()}),
                ErrorCode::kNonFiniteValue);
    CHECK_ERROR(EmbeddingMatrix(2, 2, {1, 2, 3}), ErrorCode::kDimensionMismatch);
    CHECK_ERROR(EmbeddingMatrix(1, 0, {}), ErrorCode::kInvalidArgument);
  }

  TEST_CASE("validation is idempotent and normalizes to 1 within 1e-12") {
    synthetic::Rng rng(7);
    std::uniform_int_distribution<int> count(1, 12);
    std::uniform_real_distribution<double> mass(0.0, 5.0);
    for (int trial = 0; trial < 500; ++trial) {
      const std::size_t n = static_cast<std::size_t>(count(rng));
      auto base = synthetic::random_document(rng, n, 3, false);
      WeightedDocument raw = base;
      for (std::size_t i = 0; i < n; ++i) raw.weights[i] = (i % 3 == 2) ? 0.0 : mass(rng) + 1e-3;
      const auto once = validate_document(raw);
      const auto twice = validate_document(once);
      CHECK(once == twice);
      const double sum = std::accumulate(once.weights.begin(), once.weights.end(), 0.0);
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }

  TEST_CASE("language pairs") {
    CHECK(is_valid_lang_pair("cs-en"));
    CHECK(is_valid_lang_pair("de-en"));
    CHECK_FALSE(is_valid_lang_pair("CS-en"));
    CHECK_FALSE(is_valid_lang_pair("csen"));
    CHECK_FALSE(is_valid_lang_pair("cs-"));
    CHECK_FALSE(is_valid_lang_pair("c1-en"));
  }
}
