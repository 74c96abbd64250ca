// SPDX-License-Identifier: Apache-2.0
#include "geofno/grad_check.hpp"

#include <cmath>

#include "geofno/error.hpp"
#include "geofno/tape.hpp"

namespace geofno {

namespace {

double evaluate(const ScalarFunction& f, std::span<const Tensor> params) {
  NoGradGuard no_grad;
  Tensor out;
  try {
    out = f(params);
  } catch (const NumericError& e) {
    throw EvaluationError(std::string("grad_check: function is not finite: ") + e.what());
  }
  const double v = out.item();
  if (!std::isfinite(v)) throw EvaluationError("grad_check: function returned a non-finite value");
  return v;
}

}  // namespace

GradCheckResult grad_check(const ScalarFunction& f, std::span<const Tensor> params, double eps,
                           std::size_t max_entries) {
  if (!(eps >= 1e-7 && eps <= 1e-4)) throw DomainError("grad_check: eps must lie in [1e-7, 1e-4]");
  std::vector<Tensor> leaves;
  leaves.reserve(params.size());
  for (const auto& p : params) leaves.push_back(p.with_grad());

  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    Tensor out;
    try {
      out = f(leaves);
    } catch (const NumericError& e) {
      throw EvaluationError(std::string("grad_check: function is not finite: ") + e.what());
    }
    if (!std::isfinite(out.item())) throw EvaluationError("grad_check: function returned a non-finite value");
    tape.backward(out);
    for (const auto& leaf : leaves) {
      const Tensor g = tape.grad_or_zeros(leaf);
      analytic.emplace_back(g.raw().begin(), g.raw().end());
    }
  }

  GradCheckResult result;
  std::vector<Tensor> probe(leaves.begin(), leaves.end());
  for (std::size_t p = 0; p < leaves.size(); ++p) {
    auto base = leaves[p].raw();
    const std::size_t n = base.size();
    const std::size_t stride = (max_entries > 0 && n > max_entries) ? (n + max_entries - 1) / max_entries : 1;
    std::vector<double> values(base.begin(), base.end());
    for (std::size_t j = 0; j < n; j += stride) {
      const double orig = values[j];
      values[j] = orig + eps;
      probe[p] = Tensor::from_raw(leaves[p].shape(), leaves[p].dtype(), values);
      const double up = evaluate(f, probe);
      values[j] = orig - eps;
      probe[p] = Tensor::from_raw(leaves[p].shape(), leaves[p].dtype(), values);
      const double down = evaluate(f, probe);
      values[j] = orig;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[p][j];
      const double err = std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-12);
      ++result.checked;
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_param = p;
        result.worst_index = j;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
    probe[p] = leaves[p];
  }
  return result;
}

}  // namespace geofno
