#include "camctx/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "camctx/error.hpp"

namespace camctx {

GradCheckResult finite_diff_check(const std::function<double()>& loss,
                                  std::span<const std::span<double>> params,
                                  std::span<const std::span<const double>> analytic,
                                  double epsilon) {
  if (!(epsilon >= 1e-6 && epsilon <= 1e-3))
    throw ParameterError("finite_diff_check: epsilon must lie in [1e-6, 1e-3]");
  if (params.size() != analytic.size()) throw ShapeError("finite_diff_check: tensor count mismatch");

  auto eval = [&] {
    const double v = loss();
    if (!std::isfinite(v)) throw NumericError("finite_diff_check: non-finite loss");
    return v;
  };
  eval();

  GradCheckResult result;
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t].size() != analytic[t].size())
      throw ShapeError("finite_diff_check: gradient length mismatch in tensor " + std::to_string(t));
    for (std::size_t i = 0; i < params[t].size(); ++i) {
      double& p = params[t][i];
      const double saved = p;
      p = saved + epsilon;
      const double up = eval();
      p = saved - epsilon;
      const double down = eval();
      p = saved;

      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = analytic[t][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      ++result.checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_tensor = t;
        result.worst_index = i;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace camctx
