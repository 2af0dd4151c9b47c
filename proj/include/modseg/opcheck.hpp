#pragma once

#include <string>
#include <vector>

#include "modseg/gradcheck.hpp"

namespace modseg {

struct OpCheck {
  std::string name;
  double err = 0;
  double tol = 1e-3;
  bool ok() const { return err < tol; }
};

// Gradient verification across every differentiable op plus the end-to-end
// balanced-CE loss wrt sampled parameters of all three networks (tiny
// config). All checks must come in under 1e-3 relative error.
std::vector<OpCheck> run_gradcheck_suite(std::uint64_t seed = 42);

}  // namespace modseg
