#include "camctx/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "camctx/error.hpp"

namespace camctx {

LinearMap::LinearMap(Matrix w, std::vector<double> b) : weight(std::move(w)), bias(std::move(b)) {
  if (weight.rows() == 0 || weight.cols() == 0) throw ShapeError("LinearMap: empty weight");
  if (bias.size() != weight.rows()) throw ShapeError("LinearMap: bias length != d_out");
}

LinearMap LinearMap::zeros(std::size_t d_in, std::size_t d_out) {
  return LinearMap(Matrix(d_out, d_in), std::vector<double>(d_out, 0.0));
}

LinearMap LinearMap::identity(std::size_t d) {
  return LinearMap(Matrix::identity(d), std::vector<double>(d, 0.0));
}

LinearMap LinearMap::glorot(std::size_t d_in, std::size_t d_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(d_in + d_out));
  Matrix w(d_out, d_in);
  for (auto& v : w.values()) v = rng.uniform(-limit, limit);
  return LinearMap(std::move(w), std::vector<double>(d_out, 0.0));
}

std::vector<std::span<double>> LinearMap::parameters() {
  return {weight.values(), std::span<double>(bias)};
}

std::vector<std::span<const double>> LinearMap::parameters() const {
  return {weight.values(), std::span<const double>(bias)};
}

Matrix linear_apply(MatrixView x, const LinearMap& map) {
  if (x.cols() != map.d_in()) {
    throw ShapeError("linear_apply: input width " + std::to_string(x.cols()) +
                     " != d_in " + std::to_string(map.d_in()));
  }
  Matrix out = matmul_nt(x, map.weight);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += map.bias[j];
  }
  return out;
}

Matrix linear_backward(MatrixView x, const LinearMap& map, MatrixView dy, LinearMap& grad) {
  if (dy.rows() != x.rows() || dy.cols() != map.d_out()) throw ShapeError("linear_backward: dy shape");
  if (grad.weight.rows() != map.d_out() || grad.weight.cols() != map.d_in())
    throw ShapeError("linear_backward: gradient accumulator shape");
  const Matrix dw = matmul_tn(dy, x);
  for (std::size_t i = 0; i < dw.size(); ++i) grad.weight.values()[i] += dw.values()[i];
  for (std::size_t i = 0; i < dy.rows(); ++i) {
    const auto r = dy.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) grad.bias[j] += r[j];
  }
  return matmul(dy, map.weight);
}

Matrix mean_pool_spatial(const Tensor4& a) {
  if (a.h() == 0 || a.w() == 0) throw ShapeError("mean_pool_spatial: zero spatial extent");
  Matrix out(a.n(), a.d());
  const double scale = 1.0 / static_cast<double>(a.h() * a.w());
  for (std::size_t i = 0; i < a.n(); ++i) {
    auto dst = out.row(i);
    for (std::size_t y = 0; y < a.h(); ++y)
      for (std::size_t x = 0; x < a.w(); ++x) {
        const auto cell = a.cell(i, y, x);
        for (std::size_t c = 0; c < a.d(); ++c) dst[c] += cell[c];
      }
    for (auto& v : dst) v *= scale;
  }
  return out;
}

Matrix softmax_rows(MatrixView logits, double temperature) {
  if (!(temperature > 0.0)) throw ParameterError("softmax_rows: temperature must be positive");
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto z = logits.row(i);
    auto p = out.row(i);
    if (z.empty()) continue;
    double zmax = z[0] / temperature;
    for (std::size_t j = 0; j < z.size(); ++j) {
      p[j] = z[j] / temperature;
      zmax = std::max(zmax, p[j]);
    }
    double sum = 0.0;
    for (auto& v : p) {
      v = std::exp(v - zmax);
      sum += v;
    }
    for (auto& v : p) v /= sum;
  }
  return out;
}

Matrix softmax_rows_backward(MatrixView probs, MatrixView d_probs) {
  if (probs.rows() != d_probs.rows() || probs.cols() != d_probs.cols())
    throw ShapeError("softmax_rows_backward: shapes differ");
  Matrix dz(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto p = probs.row(i);
    const auto dp = d_probs.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) dot += p[j] * dp[j];
    auto out = dz.row(i);
    for (std::size_t j = 0; j < p.size(); ++j) out[j] = p[j] * (dp[j] - dot);
  }
  return dz;
}

CrossEntropy softmax_cross_entropy(MatrixView logits, std::span<const int> labels) {
  if (labels.size() != logits.rows()) throw ShapeError("softmax_cross_entropy: label count");
  CrossEntropy ce;
  ce.d_logits = softmax_rows(logits, 1.0);
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= logits.cols())
      throw RangeError("softmax_cross_entropy: label out of range");
    auto p = ce.d_logits.row(i);
    // log-sum-exp form keeps the loss finite when p[y] underflows
    const auto z = logits.row(i);
    double zmax = z[0];
    for (double v : z) zmax = std::max(zmax, v);
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    ce.loss += std::log(sum) + zmax - z[static_cast<std::size_t>(y)];
    p[static_cast<std::size_t>(y)] -= 1.0;
  }
  return ce;
}

}  // namespace camctx
