#include "modseg/adam.hpp"

#include <cmath>

namespace modseg {

AdamState::AdamState(const std::vector<Parameter>& params, double lr_) : lr(lr_) {
  for (const Parameter& p : params) {
    Moments mv;
    mv.m.assign(static_cast<std::size_t>(p.value.size()), real(0));
    mv.v.assign(static_cast<std::size_t>(p.value.size()), real(0));
    if (!moments_.emplace(p.name, std::move(mv)).second) {
      throw ContractError("duplicate parameter name: " + p.name);
    }
  }
}

void AdamState::step(std::vector<Parameter>& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (Parameter& p : params) {
    auto it = moments_.find(p.name);
    if (it == moments_.end()) throw ContractError("no optimizer state for parameter " + p.name);
    const real* g = p.value.grad();
    if (!g) throw ContractError("missing gradient for parameter " + p.name);
    Moments& mv = it->second;
    real* w = p.value.data();
    const std::int64_t n = p.value.size();
    for (std::int64_t i = 0; i < n; ++i) {
      const double gi = g[i];
      const double m = beta1 * mv.m[i] + (1.0 - beta1) * gi;
      const double v = beta2 * mv.v[i] + (1.0 - beta2) * gi * gi;
      mv.m[i] = static_cast<real>(m);
      mv.v[i] = static_cast<real>(v);
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      w[i] = static_cast<real>(w[i] - lr * mhat / (std::sqrt(vhat) + epsilon));
    }
  }
}

}  // namespace modseg
