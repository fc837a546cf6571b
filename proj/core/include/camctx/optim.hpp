#pragma once

#include <span>
#include <vector>

namespace camctx {

// Momentum SGD with decoupled-in-velocity weight decay:
//   v <- momentum * v + grad + weight_decay * param
//   param <- param - learning_rate * v
struct OptimState {
  std::vector<std::vector<double>> velocity;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0004;
  // Per-tensor learning-rate multipliers; empty means 1 everywhere.
  std::vector<double> lr_scale;

  // Zero velocity sized to match `params`.
  static OptimState for_parameters(std::span<const std::span<double>> params,
                                   double learning_rate, double momentum = 0.9,
                                   double weight_decay = 0.0004);
};

// Updates `params` and `state.velocity` in place. Throws ShapeError when the
// tensor lists or their lengths disagree.
void sgd_step(std::span<const std::span<double>> params,
              std::span<const std::span<const double>> grads, OptimState& state);

}  // namespace camctx
