#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "camctx/matrix.hpp"
#include "camctx/rng.hpp"

namespace camctx {

// Affine map y = W x + b with W of shape [d_out x d_in].
struct LinearMap {
  Matrix weight;
  std::vector<double> bias;

  LinearMap() = default;
  LinearMap(Matrix w, std::vector<double> b);

  static LinearMap zeros(std::size_t d_in, std::size_t d_out);
  static LinearMap identity(std::size_t d);
  // Uniform in +-sqrt(6 / (d_in + d_out)), zero bias.
  static LinearMap glorot(std::size_t d_in, std::size_t d_out, Rng& rng);

  std::size_t d_in() const noexcept { return weight.cols(); }
  std::size_t d_out() const noexcept { return weight.rows(); }

  // Weights then bias, for optimizers and gradient checks.
  std::vector<std::span<double>> parameters();
  std::vector<std::span<const double>> parameters() const;

  friend bool operator==(const LinearMap&, const LinearMap&) = default;
};

// Rowwise out[i] = W x[i] + b.
Matrix linear_apply(MatrixView x, const LinearMap& map);

struct LinearGrad {
  Matrix d_weight;
  std::vector<double> d_bias;
  Matrix d_input;
};

// Backward pass of linear_apply for upstream gradient dy [n x d_out].
// Accumulates into `grad` (weight, bias) and returns d_input.
Matrix linear_backward(MatrixView x, const LinearMap& map, MatrixView dy, LinearMap& grad);

// Mean over the h x w grid: [n x h x w x d] -> [n x d].
Matrix mean_pool_spatial(const Tensor4& a);

// Rowwise softmax of logits / temperature with max subtraction.
Matrix softmax_rows(MatrixView logits, double temperature);

// Backward of a row softmax: given probabilities p and dL/dp, returns dL/dz for
// the pre-softmax values z (temperature already folded into z).
Matrix softmax_rows_backward(MatrixView probs, MatrixView d_probs);

struct CrossEntropy {
  double loss = 0.0;  // summed over rows
  Matrix d_logits;    // gradient of the summed loss
};

// Softmax cross-entropy with integer class labels, one per row.
CrossEntropy softmax_cross_entropy(MatrixView logits, std::span<const int> labels);

}  // namespace camctx
