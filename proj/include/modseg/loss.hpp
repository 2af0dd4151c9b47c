#pragma once

#include <cstdint>

#include "modseg/image.hpp"
#include "modseg/tensor.hpp"

namespace modseg {

struct LossReport {
  double loss = 0;
  double beta = 0;  // |Y-| / |Y|
  std::int64_t fg = 0;
  std::int64_t bg = 0;
  bool degenerate = false;  // all-foreground or all-background target
};

// Class-balanced sigmoid cross entropy, normalized by the pixel count:
//   loss = (beta * sum_fg -log p + (1-beta) * sum_bg -log(1-p)) / |Y|
// with p = sigmoid(logits) and logs clamped at 1e-7. Degenerate targets
// (beta in {0,1}) are valid and flagged in the report.
Tensor balanced_ce(Tape& tape, const Tensor& logits, const Mask& target,
                   LossReport* report = nullptr);

}  // namespace modseg
