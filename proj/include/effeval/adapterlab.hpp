#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace effeval::adapterlab {

enum class Family { kPfeiffer, kHoulsby, kParallel, kCompacter, kIa3 };
enum class Nonlinearity { kIdentity, kRelu };

std::string_view family_name(Family family) noexcept;
std::optional<Family> parse_family(std::string_view name) noexcept;

struct AdapterSpec {
  Family family = Family::kPfeiffer;
  std::size_t hidden_dim = 1;      // H
  std::size_t bottleneck_dim = 1;  // d, ignored by ia3
  std::size_t layer_count = 1;     // L
  Nonlinearity nonlinearity = Nonlinearity::kRelu;
  bool learned_residual = false;   // r as a learned H-vector instead of the block input
  std::size_t ia3_vectors_per_layer = 3;
  std::size_t phm_rank = 4;        // n of the compacter's Kronecker factors
};

/// Throws kInvalidArgument unless every dimension is >= 1 and d <= H.
void validate(const AdapterSpec& spec);

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double operator()(std::size_t r, std::size_t c) const noexcept { return values[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return values[r * cols + c]; }
};

Matrix identity_matrix(std::size_t n);

/// W_up * sigma(W_down * h) + r
std::vector<double> bottleneck_forward(std::span<const double> h, const Matrix& w_down,
                                       const Matrix& w_up, std::span<const double> r,
                                       Nonlinearity nonlinearity);

/// l (elementwise) W * x
std::vector<double> ia3_forward(std::span<const double> x, const Matrix& w,
                                std::span<const double> l);

struct ParamCount {
  std::uint64_t total = 0;
  std::uint64_t per_layer = 0;       // per layer, all placements
  std::uint64_t per_placement = 0;   // one adapter instance in one layer
  std::size_t placements = 0;
  std::uint64_t shared = 0;          // parameters shared across layers
  std::uint64_t dense_baseline = 0;  // 12 H^2 L: attention (4 H^2) + FFN (8 H^2) per layer
  double fraction = 0.0;             // total / dense_baseline
};

/// pfeiffer:  L * (2Hd [+ H]), one placement after the feed-forward block
/// houlsby:   two placements (after attention and after feed-forward)
/// parallel:  one placement beside the layer
/// ia3:       L * vectors_per_layer * H
/// compacter: per placement 2 (H + d) rank-one PHM factors, two placements,
///            plus n^3 shared Kronecker factors (accounting only)
ParamCount trainable_param_count(const AdapterSpec& spec);

inline constexpr double kFiniteDifferenceStep = 1e-5;
inline constexpr double kReluKinkMargin = 0.1;

struct GradCheck {
  double max_abs_error = 0.0;
  std::size_t parameters = 0;
};

/// Analytic gradient of ||bottleneck_forward(h)||^2 with respect to W_down
/// and W_up against central differences. With relu every pre-activation must
/// be at least kReluKinkMargin away from zero (kPrecondition otherwise).
GradCheck grad_check_bottleneck(std::span<const double> h, const Matrix& w_down, const Matrix& w_up,
                                std::span<const double> r, Nonlinearity nonlinearity);

/// Random instance of the given shape; relu pre-activations are redrawn
/// until they clear the kink margin.
GradCheck grad_check_bottleneck(const AdapterSpec& spec, std::uint64_t seed);

}  // namespace effeval::adapterlab
