#pragma once

#include <cstdint>
#include <functional>

#include "modseg/tensor.hpp"

namespace modseg {

// Scalar-valued function of one tensor; everything else is captured.
using ScalarFn = std::function<Tensor(Tape&, const Tensor&)>;

struct GradCheckOptions {
  // Central-difference step scale. The 32-bit default favors the storage
  // noise floor; quadratic-and-below terms see no truncation penalty.
#ifdef MODSEG_REAL_DOUBLE
  double eps = 1e-5;
#else
  double eps = 1e-2;
#endif
  // Check at most this many coordinates (0 = all), sampled deterministically.
  int max_coords = 0;
  std::uint64_t seed = 7;
  // Pick the largest-|gradient| coordinates instead of random ones. Deep
  // composites in 32-bit need this: coordinates whose true gradient sits
  // below the storage-noise floor cannot be resolved by finite differences.
  bool select_largest = false;
};

// Compares reverse-mode gradients of f at x against central differences.
// Returns max over checked coordinates of
//   |analytic - cd| / max(|analytic|, |cd|, 1e-8).
// Steps are scaled per coordinate by max(1,|x_i|) and the realized step is
// measured after storage rounding, so the result is meaningful in 32-bit.
double grad_check(const ScalarFn& f, const Tensor& x, const GradCheckOptions& opts = {});

// Same check for a tensor that lives inside a model: f reads x through
// shared storage, so coordinates are perturbed in place (and restored).
double grad_check_inplace(const std::function<Tensor(Tape&)>& f, const Tensor& x,
                          const GradCheckOptions& opts = {});

}  // namespace modseg
