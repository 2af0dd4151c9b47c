#include "modseg/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "modseg/rng.hpp"

namespace modseg {

namespace {

std::vector<std::int64_t> pick_coords(std::int64_t n, const GradCheckOptions& opts,
                                      const std::vector<double>& analytic) {
  std::vector<std::int64_t> coords(static_cast<std::size_t>(n));
  std::iota(coords.begin(), coords.end(), 0);
  if (opts.select_largest) {
    std::sort(coords.begin(), coords.end(), [&](std::int64_t a, std::int64_t b) {
      return std::abs(analytic[static_cast<std::size_t>(a)]) >
             std::abs(analytic[static_cast<std::size_t>(b)]);
    });
    if (opts.max_coords > 0 && opts.max_coords < n) {
      coords.resize(static_cast<std::size_t>(opts.max_coords));
    }
    // drop coordinates far below the tensor's dominant gradient: their
    // finite-difference signal drowns in storage rounding
    const double top = std::abs(analytic[static_cast<std::size_t>(coords[0])]);
    std::size_t keep = 1;
    while (keep < coords.size() &&
           std::abs(analytic[static_cast<std::size_t>(coords[keep])]) >= 0.2 * top) {
      ++keep;
    }
    coords.resize(keep);
  } else if (opts.max_coords > 0 && opts.max_coords < n) {
    Rng rng(opts.seed);
    for (std::size_t i = coords.size() - 1; i > 0; --i) {
      std::swap(coords[i], coords[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)))]);
    }
    coords.resize(static_cast<std::size_t>(opts.max_coords));
  }
  return coords;
}

double fd_scan(const std::function<double()>& eval, Tensor work,
               const std::vector<double>& analytic, const std::vector<std::int64_t>& coords,
               double eps) {
  double worst = 0.0;
  for (std::int64_t ci : coords) {
    const real orig = work.data()[ci];
    const double h = eps * std::max(1.0, std::abs(static_cast<double>(orig)));
    const real xp = static_cast<real>(static_cast<double>(orig) + h);
    const real xm = static_cast<real>(static_cast<double>(orig) - h);

    work.data()[ci] = xp;
    const double fp = eval();
    work.data()[ci] = xm;
    const double fm = eval();
    work.data()[ci] = orig;

    const double step = static_cast<double>(xp) - static_cast<double>(xm);
    const double cd = (fp - fm) / step;
    const double a = analytic[static_cast<std::size_t>(ci)];
    const double denom = std::max({std::abs(a), std::abs(cd), 1e-8});
    worst = std::max(worst, std::abs(a - cd) / denom);
  }
  return worst;
}

}  // namespace

double grad_check(const ScalarFn& f, const Tensor& x, const GradCheckOptions& opts) {
  Tensor probe = x.clone();
  probe.set_requires_grad(true);

  Tape tape;
  Tensor loss = f(tape, probe);
  if (loss.size() != 1) throw ContractError("grad_check needs a scalar-valued function");
  tape.backward(loss);
  const real* g = probe.grad();
  std::vector<double> analytic(static_cast<std::size_t>(probe.size()), 0.0);
  if (g) {
    for (std::int64_t i = 0; i < probe.size(); ++i) analytic[static_cast<std::size_t>(i)] = g[i];
  }

  probe.set_requires_grad(false);
  probe.zero_grad();
  Tape no_tape(false);
  auto eval = [&]() { return f(no_tape, probe).scalar_value(); };
  return fd_scan(eval, probe, analytic, pick_coords(probe.size(), opts, analytic), opts.eps);
}

double grad_check_inplace(const std::function<Tensor(Tape&)>& f, const Tensor& x,
                          const GradCheckOptions& opts) {
  Tensor live = x;  // shared node: perturbations reach the model
  const bool had_grad = live.requires_grad();
  live.set_requires_grad(true);
  live.zero_grad();

  Tape tape;
  Tensor loss = f(tape);
  if (loss.size() != 1) throw ContractError("grad_check_inplace needs a scalar-valued function");
  tape.backward(loss);
  const real* g = live.grad();
  std::vector<double> analytic(static_cast<std::size_t>(live.size()), 0.0);
  if (g) {
    for (std::int64_t i = 0; i < live.size(); ++i) analytic[static_cast<std::size_t>(i)] = g[i];
  }
  live.zero_grad();
  live.set_requires_grad(had_grad);

  Tape no_tape(false);
  auto eval = [&]() { return f(no_tape).scalar_value(); };
  return fd_scan(eval, live, analytic, pick_coords(live.size(), opts, analytic), opts.eps);
}

}  // namespace modseg
