#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace camctx {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;

  bool passed(double tolerance) const noexcept { return max_relative_error <= tolerance; }
};

// Compares analytic gradients against central differences of `loss`.
// `params[i]` is perturbed in place and restored; `analytic[i]` must have the
// same length. Relative error per coordinate is
//   |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
// Throws ParameterError for epsilon outside [1e-6, 1e-3], ShapeError on length
// mismatch, NumericError if the loss is not finite.
GradCheckResult finite_diff_check(const std::function<double()>& loss,
                                  std::span<const std::span<double>> params,
                                  std::span<const std::span<const double>> analytic,
                                  double epsilon);

}  // namespace camctx
