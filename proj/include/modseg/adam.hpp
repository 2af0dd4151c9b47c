#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "modseg/tensor.hpp"

namespace modseg {

// Bias-corrected Adam. Moment buffers are keyed by parameter name and
// zero-initialized on construction; t counts completed steps.
class AdamState {
 public:
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  AdamState(const std::vector<Parameter>& params, double lr_);

  std::int64_t step_count() const { return t_; }

  // One update over all parameters. Every parameter must carry a gradient
  // buffer (zero counts; missing throws ContractError).
  void step(std::vector<Parameter>& params);

 private:
  struct Moments {
    std::vector<real> m, v;
  };
  std::unordered_map<std::string, Moments> moments_;
  std::int64_t t_ = 0;
};

}  // namespace modseg
