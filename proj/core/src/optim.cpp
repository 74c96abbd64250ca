// SPDX-License-Identifier: Apache-2.0
#include "geofno/optim.hpp"

#include <cmath>

#include "geofno/error.hpp"

namespace geofno {

AdamState AdamState::for_params(std::span<const Tensor> params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.raw().size(), 0.0);
    s.v.emplace_back(p.raw().size(), 0.0);
  }
  return s;
}

std::vector<Tensor> adam_step(std::span<const Tensor> params, std::span<const Tensor> grads, AdamState& state,
                              const AdamConfig& config) {
  if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError("adam_step: parameter, gradient and moment counts differ");
  }
  if (state.step < 0) throw DimensionError("adam_step: negative step counter");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::size_t n = params[i].raw().size();
    if (grads[i].shape() != params[i].shape() || grads[i].dtype() != params[i].dtype() || state.m[i].size() != n ||
        state.v[i].size() != n) {
      throw DimensionError("adam_step: shape mismatch for parameter " + std::to_string(i));
    }
  }
  const std::int64_t t = state.step + 1;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].raw();
    auto g = grads[i].raw();
    auto& m = state.m[i];
    auto& v = state.v[i];
    std::vector<double> next(theta.size());
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      next[j] = theta[j] - config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
    out.push_back(Tensor::from_raw(params[i].shape(), params[i].dtype(), std::move(next))
                      .with_grad(params[i].requires_grad()));
  }
  state.step = t;
  return out;
}

}  // namespace geofno
