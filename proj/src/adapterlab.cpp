#include "effeval/adapterlab.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "effeval/error.hpp"

namespace effeval::adapterlab {
namespace {

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* what) {
  if (m.rows != rows || m.cols != cols || m.values.size() != rows * cols) {
    raise(ErrorCode::kDimensionMismatch, std::string(what) + " must be " + std::to_string(rows) +
                                             "x" + std::to_string(cols));
  }
}

std::vector<double> matvec(const Matrix& m, std::span<const double> x) {
  std::vector<double> y(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < m.cols; ++k) s += m(i, k) * x[k];
    y[i] = s;
  }
  return y;
}

double activate(double z, Nonlinearity nl) noexcept {
  return nl == Nonlinearity::kRelu ? std::max(0.0, z) : z;
}

double loss(std::span<const double> h, const Matrix& w_down, const Matrix& w_up,
            std::span<const double> r, Nonlinearity nl) {
  const auto out = bottleneck_forward(h, w_down, w_up, r, nl);
  double s = 0.0;
  for (double v : out) s += v * v;
  return s;
}

}  // namespace

std::string_view family_name(Family family) noexcept {
  switch (family) {
    case Family::kPfeiffer: return "pfeiffer";
    case Family::kHoulsby: return "houlsby";
    case Family::kParallel: return "parallel";
    case Family::kCompacter: return "compacter";
    case Family::kIa3: return "ia3";
  }
  return "unknown";
}

std::optional<Family> parse_family(std::string_view name) noexcept {
  for (auto f : {Family::kPfeiffer, Family::kHoulsby, Family::kParallel, Family::kCompacter,
                 Family::kIa3}) {
    if (family_name(f) == name) return f;
  }
  return std::nullopt;
}

void validate(const AdapterSpec& s) {
  if (s.hidden_dim == 0 || s.layer_count == 0) {
    raise(ErrorCode::kInvalidArgument, "hidden_dim and layer_count must be >= 1");
  }
  if (s.family == Family::kIa3) {
    if (s.ia3_vectors_per_layer == 0) raise(ErrorCode::kInvalidArgument, "ia3 needs >= 1 vector per layer");
    return;
  }
  if (s.bottleneck_dim == 0) raise(ErrorCode::kInvalidArgument, "bottleneck_dim must be >= 1");
  if (s.bottleneck_dim > s.hidden_dim) {
    raise(ErrorCode::kInvalidArgument, "bottleneck_dim must not exceed hidden_dim");
  }
  if (s.family == Family::kCompacter && s.phm_rank == 0) {
    raise(ErrorCode::kInvalidArgument, "phm_rank must be >= 1");
  }
}

Matrix identity_matrix(std::size_t n) {
  Matrix m{n, n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<double> bottleneck_forward(std::span<const double> h, const Matrix& w_down,
                                       const Matrix& w_up, std::span<const double> r,
                                       Nonlinearity nonlinearity) {
  const std::size_t hidden = h.size();
  const std::size_t d = w_down.rows;
  require_shape(w_down, d, hidden, "W_down");
  require_shape(w_up, hidden, d, "W_up");
  if (r.size() != hidden) raise(ErrorCode::kDimensionMismatch, "residual must have H entries");
  auto a = matvec(w_down, h);
  for (auto& v : a) v = activate(v, nonlinearity);
  auto out = matvec(w_up, a);
  for (std::size_t i = 0; i < hidden; ++i) out[i] += r[i];
  return out;
}

std::vector<double> ia3_forward(std::span<const double> x, const Matrix& w,
                                std::span<const double> l) {
  require_shape(w, x.size(), x.size(), "W");
  if (l.size() != x.size()) raise(ErrorCode::kDimensionMismatch, "scaling vector must have H entries");
  auto out = matvec(w, x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= l[i];
  return out;
}

ParamCount trainable_param_count(const AdapterSpec& s) {
  validate(s);
  const std::uint64_t H = s.hidden_dim;
  const std::uint64_t d = s.bottleneck_dim;
  const std::uint64_t L = s.layer_count;
  ParamCount c;
  switch (s.family) {
    case Family::kPfeiffer:
    case Family::kParallel:
      c.placements = 1;
      c.per_placement = 2 * H * d + (s.learned_residual ? H : 0);
      break;
    case Family::kHoulsby:
      c.placements = 2;
      c.per_placement = 2 * H * d + (s.learned_residual ? H : 0);
      break;
    case Family::kCompacter: {
      const std::uint64_t n = s.phm_rank;
      c.placements = 2;
      c.per_placement = 2 * (H + d);
      c.shared = n * n * n;
      break;
    }
    case Family::kIa3:
      c.placements = 1;
      c.per_placement = s.ia3_vectors_per_layer * H;
      break;
  }
  c.per_layer = c.per_placement * c.placements;
  c.total = c.per_layer * L + c.shared;
  c.dense_baseline = 12 * H * H * L;
  c.fraction = static_cast<double>(c.total) / static_cast<double>(c.dense_baseline);
  return c;
}

GradCheck grad_check_bottleneck(std::span<const double> h, const Matrix& w_down, const Matrix& w_up,
                                std::span<const double> r, Nonlinearity nl) {
  const std::size_t hidden = h.size();
  const std::size_t d = w_down.rows;
  const auto out = bottleneck_forward(h, w_down, w_up, r, nl);
  const auto z = matvec(w_down, h);
  if (nl == Nonlinearity::kRelu) {
    for (double v : z) {
      if (std::abs(v) < kReluKinkMargin) {
        raise(ErrorCode::kPrecondition, "relu pre-activation too close to the kink for a gradient check");
      }
    }
  }

  // backward pass of L = sum out^2
  std::vector<double> a(d);
  for (std::size_t j = 0; j < d; ++j) a[j] = activate(z[j], nl);
  Matrix g_up{hidden, d, std::vector<double>(hidden * d)};
  for (std::size_t i = 0; i < hidden; ++i) {
    for (std::size_t j = 0; j < d; ++j) g_up(i, j) = 2.0 * out[i] * a[j];
  }
  std::vector<double> g_z(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < hidden; ++i) s += w_up(i, j) * 2.0 * out[i];
    const double slope = nl == Nonlinearity::kRelu ? (z[j] > 0.0 ? 1.0 : 0.0) : 1.0;
    g_z[j] = s * slope;
  }
  Matrix g_down{d, hidden, std::vector<double>(d * hidden)};
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = 0; k < hidden; ++k) g_down(j, k) = g_z[j] * h[k];
  }

  GradCheck result;
  Matrix down = w_down;
  Matrix up = w_up;
  auto check = [&](Matrix& m, const Matrix& analytic) {
    for (std::size_t k = 0; k < m.values.size(); ++k) {
      const double saved = m.values[k];
      m.values[k] = saved + kFiniteDifferenceStep;
      const double plus = loss(h, down, up, r, nl);
      m.values[k] = saved - kFiniteDifferenceStep;
      const double minus = loss(h, down, up, r, nl);
      m.values[k] = saved;
      const double numeric = (plus - minus) / (2.0 * kFiniteDifferenceStep);
      result.max_abs_error = std::max(result.max_abs_error, std::abs(numeric - analytic.values[k]));
      ++result.parameters;
    }
  };
  check(down, g_down);
  check(up, g_up);
  return result;
}

GradCheck grad_check_bottleneck(const AdapterSpec& spec, std::uint64_t seed) {
  AdapterSpec s = spec;
  if (s.family == Family::kIa3) raise(ErrorCode::kInvalidArgument, "ia3 has no bottleneck");
  validate(s);
  const std::size_t hidden = s.hidden_dim;
  const std::size_t d = s.bottleneck_dim;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 0.5);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  std::vector<double> h(hidden);
  std::vector<double> r(hidden);
  for (auto& v : h) v = unit(rng);
  for (auto& v : r) v = unit(rng);
  Matrix w_down{d, hidden, std::vector<double>(d * hidden)};
  Matrix w_up{hidden, d, std::vector<double>(hidden * d)};
  for (auto& v : w_up.values) v = gauss(rng);
  for (std::size_t j = 0; j < d; ++j) {
    while (true) {
      double z = 0.0;
      for (std::size_t k = 0; k < hidden; ++k) {
        w_down(j, k) = gauss(rng);
        z += w_down(j, k) * h[k];
      }
      if (s.nonlinearity == Nonlinearity::kIdentity || std::abs(z) >= kReluKinkMargin) break;
    }
  }
  return grad_check_bottleneck(h, w_down, w_up, r, s.nonlinearity);
}

}  // namespace effeval::adapterlab
