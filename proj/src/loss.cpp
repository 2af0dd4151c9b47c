#include "modseg/loss.hpp"

#include <cmath>

namespace modseg {

namespace {
constexpr double kLogClamp = 1e-7;
}

Tensor balanced_ce(Tape& tape, const Tensor& logits, const Mask& target, LossReport* report) {
  if (logits.ndim() != 4 || logits.dim(0) != 1 || logits.dim(1) != 1) {
    throw ShapeError("balanced_ce expects logits [1,1,H,W], got " + shape_str(logits.shape()));
  }
  const int h = logits.dim(2), w = logits.dim(3);
  if (target.height != h || target.width != w) {
    throw ShapeError("balanced_ce target size mismatch");
  }
  const std::int64_t total = static_cast<std::int64_t>(h) * w;

  std::int64_t fg = 0;
  for (std::uint8_t b : target.v) fg += b ? 1 : 0;
  const std::int64_t bg = total - fg;
  const double beta = static_cast<double>(bg) / static_cast<double>(total);

  double acc = 0;
  for (std::int64_t i = 0; i < total; ++i) {
    const double z = logits.data()[i];
    const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    if (target.v[static_cast<std::size_t>(i)]) {
      acc -= beta * std::log(std::max(p, kLogClamp));
    } else {
      acc -= (1.0 - beta) * std::log(std::max(1.0 - p, kLogClamp));
    }
  }
  const double value = acc / static_cast<double>(total);

  if (report) {
    report->loss = value;
    report->beta = beta;
    report->fg = fg;
    report->bg = bg;
    report->degenerate = fg == 0 || bg == 0;
  }

  Tensor loss = Tensor::scalar(static_cast<real>(value));
  loss.set_exact_scalar(value);
  if (track(tape, logits)) {
    loss.set_requires_grad(true);
    Tensor lin = logits, lout = loss;
    Mask tgt = target;
    tape.record(loss, [lin, lout, tgt, beta, total]() {
      const real* gl = lout.grad();
      if (!gl) return;
      const double g0 = static_cast<double>(gl[0]) / static_cast<double>(total);
      real* gx = lin.ensure_grad();
      for (std::int64_t i = 0; i < total; ++i) {
        const double z = lin.data()[i];
        const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        double d = 0;
        if (tgt.v[static_cast<std::size_t>(i)]) {
          if (p > kLogClamp) d = -beta * (1.0 - p);  // clamped region has zero slope
        } else {
          if (1.0 - p > kLogClamp) d = (1.0 - beta) * p;
        }
        gx[i] += static_cast<real>(g0 * d);
      }
    });
  }
  return loss;
}

}  // namespace modseg
