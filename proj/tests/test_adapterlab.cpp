#include <random>

#include "effeval/adapterlab.hpp"
#include "support.hpp"

using namespace effeval;
using namespace effeval::adapterlab;

namespace {

AdapterSpec spec(Family f, std::size_t h, std::size_t d, std::size_t l) {
  AdapterSpec s;
  s.family = f;
  s.hidden_dim = h;
  s.bottleneck_dim = d;
  s.layer_count = l;
  return s;
}

Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::normal_distribution<double> g;
  Matrix m{r, c, std::vector<double>(r * c)};
  for (auto& v : m.values) v = g(rng);
  return m;
}

}  // namespace

TEST_SUITE("adapterlab") {
  TEST_CASE("bottleneck forward examples") {
    const std::vector<double> h{1, 2, 3};
    const std::vector<double> r{0.5, -1, 4};
    const Matrix zero_down{2, 3, std::vector<double>(6, 0.0)};
    std::mt19937_64 rng(1);
    const auto up = random_matrix(rng, 3, 2);
    for (auto nl : {Nonlinearity::kIdentity, Nonlinearity::kRelu}) {
      CHECK(bottleneck_forward(h, zero_down, up, r, nl) == r);
    }
    const std::vector<double> zeros(3, 0.0);
    CHECK(bottleneck_forward(h, identity_matrix(3), identity_matrix(3), zeros, Nonlinearity::kIdentity) == h);

    const Matrix down{1, 2, {1, 1}};
    const Matrix up2{2, 1, {2, 3}};
    const std::vector<double> h2{1, 2};
    const std::vector<double> r2{1, 1};
    CHECK(bottleneck_forward(h2, down, up2, r2, Nonlinearity::kRelu) == std::vector<double>{7, 10});
    const std::vector<double> neg{-1, -2};
    CHECK(bottleneck_forward(neg, down, up2, r2, Nonlinearity::kRelu) == r2);

    CHECK_ERROR(bottleneck_forward(h2, down, up2, r, Nonlinearity::kRelu), ErrorCode::kDimensionMismatch);
    CHECK_ERROR(bottleneck_forward(h, down, up2, r, Nonlinearity::kRelu), ErrorCode::kDimensionMismatch);
  }

  TEST_CASE("ia3 forward examples") {
    std::mt19937_64 rng(2);
    const auto w = random_matrix(rng, 4, 4);
    const std::vector<double> x{0.5, -1, 2, 3};
    const std::vector<double> ones(4, 1.0);
    std::vector<double> wx(4, 0.0);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t k = 0; k < 4; ++k) wx[i] += w(i, k) * x[k];
    }
    CHECK(ia3_forward(x, w, ones) == wx);
    const std::vector<double> l{2, -1, 0.5, 3};
    const auto out = ia3_forward(x, w, l);
    for (std::size_t i = 0; i < 4; ++i) CHECK(out[i] == l[i] * wx[i]);
    const std::vector<double> x2{1, 1};
    const std::vector<double> l2{2, 3};
    CHECK(ia3_forward(x2, identity_matrix(2), l2) == std::vector<double>{2, 3});
    CHECK_ERROR(ia3_forward(x2, identity_matrix(3), l2), ErrorCode::kDimensionMismatch);
  }

  TEST_CASE("parameter counts") {
    // pfeiffer H=4 d=2: W_down 2x4 + W_up 4x2 = 16
    CHECK(trainable_param_count(spec(Family::kPfeiffer, 4, 2, 1)).total == 16);
    auto residual = spec(Family::kPfeiffer, 4, 2, 1);
    residual.learned_residual = true;
    CHECK(trainable_param_count(residual).total == 20);
    auto ia3 = spec(Family::kIa3, 4, 1, 2);
    CHECK(trainable_param_count(ia3).total == 24);
    for (std::size_t h : {8u, 64u, 768u}) {
      for (std::size_t d : {1u, 4u, 8u}) {
        const auto p = trainable_param_count(spec(Family::kPfeiffer, h, d, 12)).total;
        const auto hb = trainable_param_count(spec(Family::kHoulsby, h, d, 12)).total;
        CHECK(hb == 2 * p);
        CHECK(trainable_param_count(spec(Family::kParallel, h, d, 12)).total == p);
      }
    }
    const auto c = trainable_param_count(spec(Family::kCompacter, 768, 48, 12));
    CHECK(c.total == 12 * 2 * 2 * (768 + 48) + 4 * 4 * 4);
    CHECK(c.dense_baseline == 12ull * 768 * 768 * 12);
    CHECK_ERROR(trainable_param_count(spec(Family::kPfeiffer, 4, 0, 1)), ErrorCode::kInvalidArgument);
    CHECK_ERROR(trainable_param_count(spec(Family::kPfeiffer, 4, 5, 1)), ErrorCode::kInvalidArgument);
  }

  TEST_CASE("gradient check") {
    for (auto nl : {Nonlinearity::kIdentity, Nonlinearity::kRelu}) {
      for (std::size_t h = 1; h <= 8; ++h) {
        for (std::size_t d = 1; d <= h; d += 2) {
          auto s = spec(Family::kPfeiffer, h, d, 1);
          s.nonlinearity = nl;
          const auto g = grad_check_bottleneck(s, 1000 + h * 10 + d);
          CHECK(g.max_abs_error < 1e-6);
          CHECK(g.parameters == 2 * h * d);
        }
      }
    }
  }

  TEST_CASE("relu kink is excluded") {
    const Matrix down{1, 2, {1, -1}};
    const Matrix up{2, 1, {1, 1}};
    const std::vector<double> h{0.5, 0.5};
    const std::vector<double> r{0, 0};
    CHECK_ERROR(grad_check_bottleneck(h, down, up, r, Nonlinearity::kRelu), ErrorCode::kPrecondition);
    CHECK(grad_check_bottleneck(h, down, up, r, Nonlinearity::kIdentity).max_abs_error < 1e-6);
  }
}
