#include "camctx/optim.hpp"

#include "camctx/error.hpp"

namespace camctx {

OptimState OptimState::for_parameters(std::span<const std::span<double>> params,
                                      double learning_rate, double momentum,
                                      double weight_decay) {
  OptimState s;
  s.learning_rate = learning_rate;
  s.momentum = momentum;
  s.weight_decay = weight_decay;
  s.velocity.reserve(params.size());
  for (const auto& p : params) s.velocity.emplace_back(p.size(), 0.0);
  return s;
}

void sgd_step(std::span<const std::span<double>> params,
              std::span<const std::span<const double>> grads, OptimState& state) {
  if (params.size() != grads.size() || params.size() != state.velocity.size())
    throw ShapeError("sgd_step: tensor count mismatch");
  if (!state.lr_scale.empty() && state.lr_scale.size() != params.size())
    throw ShapeError("sgd_step: lr_scale length mismatch");
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto p = params[t];
    auto g = grads[t];
    auto& v = state.velocity[t];
    if (p.size() != g.size() || p.size() != v.size())
      throw ShapeError("sgd_step: shape mismatch in tensor " + std::to_string(t));
    const double lr = state.learning_rate * (state.lr_scale.empty() ? 1.0 : state.lr_scale[t]);
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = state.momentum * v[i] + g[i] + state.weight_decay * p[i];
      p[i] -= lr * v[i];
    }
  }
}

}  // namespace camctx
