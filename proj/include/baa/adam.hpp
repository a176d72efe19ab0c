#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "baa/errors.hpp"

namespace baa {

// Standard bias-corrected Adam. Weight decay enters as an additive
// lambda * theta term in the gradient (classic Adam-with-L2).

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-8;
};

struct AdamState {
  std::int64_t step = 0;
  std::vector<double> m;  // first moment
  std::vector<double> v;  // second moment

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

inline void adam_step(AdamState& state, std::vector<double>& params,
                      const std::vector<double>& grads, const AdamConfig& cfg) {
  if (state.m.size() != params.size() || grads.size() != params.size())
    throw DimensionError("adam_step: parameter/moment/gradient sizes differ");

  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i] + cfg.weight_decay * params[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

}  // namespace baa
