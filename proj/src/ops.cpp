#include "modseg/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace modseg {

namespace {

void require_4d(const Tensor& x, const char* what) {
  if (x.ndim() != 4) {
    throw ShapeError(std::string(what) + " expects a 4-D tensor, got " + shape_str(x.shape()));
  }
}

// Zero-padded copy of one image [C,H,W] -> [C,H+2p,W+2p].
std::vector<real> pad_image(const real* x, int c, int h, int w, int p) {
  const int hp = h + 2 * p;
  const int wp = w + 2 * p;
  std::vector<real> out(static_cast<std::size_t>(c) * hp * wp, real(0));
  for (int ci = 0; ci < c; ++ci) {
    for (int y = 0; y < h; ++y) {
      const real* src = x + (static_cast<std::int64_t>(ci) * h + y) * w;
      real* dst = out.data() + (static_cast<std::int64_t>(ci) * hp + y + p) * wp + p;
      std::memcpy(dst, src, sizeof(real) * static_cast<std::size_t>(w));
    }
  }
  return out;
}

}  // namespace

Tensor conv2d(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b, Padding padding) {
  require_4d(x, "conv2d input");
  require_4d(w, "conv2d weight");
  const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  if (w.dim(1) != cin) {
    throw ShapeError("conv2d channel mismatch: input has " + std::to_string(cin) +
                     " channels, weight expects " + std::to_string(w.dim(1)));
  }
  if (b.ndim() != 1 || b.dim(0) != cout) {
    throw ShapeError("conv2d bias must have shape [" + std::to_string(cout) + "]");
  }
  int pad = 0;
  if (padding == Padding::Same) {
    if (kh % 2 == 0 || kw % 2 == 0) {
      throw ShapeError("same padding requires odd kernel sizes, got " + shape_str(w.shape()));
    }
    pad = (kh - 1) / 2;
    if ((kw - 1) / 2 != pad) throw ShapeError("same padding requires square kernels");
  }
  const int oh = h + 2 * pad - kh + 1;
  const int ow = wd + 2 * pad - kw + 1;
  if (oh < 1 || ow < 1) {
    throw ShapeError("conv2d kernel " + shape_str(w.shape()) + " does not fit input " +
                     shape_str(x.shape()));
  }

  Tensor y({n, cout, oh, ow});
  const int hp = h + 2 * pad, wp = wd + 2 * pad;
  const std::int64_t x_img = static_cast<std::int64_t>(cin) * h * wd;
  const std::int64_t y_img = static_cast<std::int64_t>(cout) * oh * ow;
  for (int ni = 0; ni < n; ++ni) {
    std::vector<real> xp;
    const real* xbase = x.data() + ni * x_img;
    if (pad > 0) {
      xp = pad_image(xbase, cin, h, wd, pad);
      xbase = xp.data();
    }
    real* ybase = y.data() + ni * y_img;
    for (int co = 0; co < cout; ++co) {
      real* yc = ybase + static_cast<std::int64_t>(co) * oh * ow;
      std::fill(yc, yc + static_cast<std::int64_t>(oh) * ow, b.data()[co]);
      for (int ci = 0; ci < cin; ++ci) {
        const real* xc = xbase + static_cast<std::int64_t>(ci) * hp * wp;
        const real* wc = w.data() + ((static_cast<std::int64_t>(co) * cin + ci) * kh) * kw;
        for (int ky = 0; ky < kh; ++ky) {
          for (int kx = 0; kx < kw; ++kx) {
            const real wv = wc[ky * kw + kx];
            if (wv == real(0)) continue;
            for (int yo = 0; yo < oh; ++yo) {
              const real* xrow = xc + (yo + ky) * wp + kx;
              real* yrow = yc + static_cast<std::int64_t>(yo) * ow;
              for (int xo = 0; xo < ow; ++xo) yrow[xo] += wv * xrow[xo];
            }
          }
        }
      }
    }
  }

  if (track(tape, x, w, b)) {
    y.set_requires_grad(true);
    Tensor xin = x, win = w, bin = b, yout = y;
    tape.record(y, [xin, win, bin, yout, n, cin, h, wd, cout, kh, kw, pad, oh, ow]() {
      const real* gy = yout.grad();
      if (!gy) return;
      const int hp = h + 2 * pad, wp = wd + 2 * pad;
      const std::int64_t x_img = static_cast<std::int64_t>(cin) * h * wd;
      const std::int64_t y_img = static_cast<std::int64_t>(cout) * oh * ow;

      if (bin.requires_grad()) {
        real* gb = bin.ensure_grad();
        for (int ni = 0; ni < n; ++ni) {
          for (int co = 0; co < cout; ++co) {
            const real* g = gy + ni * y_img + static_cast<std::int64_t>(co) * oh * ow;
            double acc = 0;
            for (std::int64_t i = 0; i < static_cast<std::int64_t>(oh) * ow; ++i) acc += g[i];
            gb[co] += static_cast<real>(acc);
          }
        }
      }

      const bool need_dx = xin.requires_grad();
      const bool need_dw = win.requires_grad();
      if (!need_dx && !need_dw) return;

      real* gw = need_dw ? win.ensure_grad() : nullptr;
      real* gx = need_dx ? xin.ensure_grad() : nullptr;
      std::vector<real> gxp;  // padded dx scratch, reused across images
      if (need_dx && pad > 0) gxp.resize(static_cast<std::size_t>(cin) * hp * wp);

      for (int ni = 0; ni < n; ++ni) {
        std::vector<real> xp;
        const real* xbase = xin.data() + ni * x_img;
        if (pad > 0) {
          xp = pad_image(xbase, cin, h, wd, pad);
          xbase = xp.data();
        }
        real* gxbase = nullptr;
        if (need_dx) {
          if (pad > 0) {
            std::fill(gxp.begin(), gxp.end(), real(0));
            gxbase = gxp.data();
          } else {
            gxbase = gx + ni * x_img;
          }
        }
        const real* gybase = gy + ni * y_img;
        for (int co = 0; co < cout; ++co) {
          const real* gc = gybase + static_cast<std::int64_t>(co) * oh * ow;
          for (int ci = 0; ci < cin; ++ci) {
            const real* xc = xbase + static_cast<std::int64_t>(ci) * hp * wp;
            real* gxc = need_dx ? gxbase + static_cast<std::int64_t>(ci) * hp * wp : nullptr;
            const std::int64_t wofs = ((static_cast<std::int64_t>(co) * cin + ci) * kh) * kw;
            for (int ky = 0; ky < kh; ++ky) {
              for (int kx = 0; kx < kw; ++kx) {
                if (need_dw) {
                  double acc = 0;
                  for (int yo = 0; yo < oh; ++yo) {
                    const real* xrow = xc + (yo + ky) * wp + kx;
                    const real* grow = gc + static_cast<std::int64_t>(yo) * ow;
                    for (int xo = 0; xo < ow; ++xo) acc += xrow[xo] * grow[xo];
                  }
                  gw[wofs + ky * kw + kx] += static_cast<real>(acc);
                }
                if (need_dx) {
                  const real wv = win.data()[wofs + ky * kw + kx];
                  if (wv == real(0)) continue;
                  for (int yo = 0; yo < oh; ++yo) {
                    real* gxrow = gxc + (yo + ky) * wp + kx;
                    const real* grow = gc + static_cast<std::int64_t>(yo) * ow;
                    for (int xo = 0; xo < ow; ++xo) gxrow[xo] += wv * grow[xo];
                  }
                }
              }
            }
          }
        }
        if (need_dx && pad > 0) {
          // crop the padded gradient back onto x
          real* dst = gx + ni * x_img;
          for (int ci = 0; ci < cin; ++ci) {
            for (int yy = 0; yy < h; ++yy) {
              const real* src = gxp.data() + (static_cast<std::int64_t>(ci) * hp + yy + pad) * wp + pad;
              real* drow = dst + (static_cast<std::int64_t>(ci) * h + yy) * wd;
              for (int xx = 0; xx < wd; ++xx) drow[xx] += src[xx];
            }
          }
        }
      }
    });
  }
  return y;
}

Tensor maxpool2(Tape& tape, const Tensor& x) {
  require_4d(x, "maxpool2");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 != 0 || w % 2 != 0) {
    throw ShapeError("maxpool2 requires even H and W, got " + shape_str(x.shape()));
  }
  const int oh = h / 2, ow = w / 2;
  Tensor y({n, c, oh, ow});
  std::vector<std::int64_t> arg(static_cast<std::size_t>(y.size()));
  const real* xd = x.data();
  real* yd = y.data();
  std::int64_t o = 0;
  for (int nc = 0; nc < n * c; ++nc) {
    const real* plane = xd + static_cast<std::int64_t>(nc) * h * w;
    for (int yo = 0; yo < oh; ++yo) {
      for (int xo = 0; xo < ow; ++xo, ++o) {
        // row-major window scan; ties keep the first occurrence
        std::int64_t best = static_cast<std::int64_t>(2 * yo) * w + 2 * xo;
        real bv = plane[best];
        const std::int64_t cand[3] = {best + 1, best + w, best + w + 1};
        for (std::int64_t ci : cand) {
          if (plane[ci] > bv) {
            bv = plane[ci];
            best = ci;
          }
        }
        yd[o] = bv;
        arg[static_cast<std::size_t>(o)] = static_cast<std::int64_t>(nc) * h * w + best;
      }
    }
  }
  if (track(tape, x)) {
    y.set_requires_grad(true);
    Tensor xin = x, yout = y;
    tape.record(y, [xin, yout, arg = std::move(arg)]() {
      const real* gy = yout.grad();
      if (!gy) return;
      real* gx = xin.ensure_grad();
      for (std::size_t i = 0; i < arg.size(); ++i) gx[arg[i]] += gy[i];
    });
  }
  return y;
}

Tensor relu(Tape& tape, const Tensor& x) {
  Tensor y(x.shape());
  const real* xd = x.data();
  real* yd = y.data();
  const std::int64_t n = x.size();
  for (std::int64_t i = 0; i < n; ++i) yd[i] = xd[i] > real(0) ? xd[i] : real(0);
  if (track(tape, x)) {
    y.set_requires_grad(true);
    Tensor xin = x, yout = y;
    tape.record(y, [xin, yout, n]() {
      const real* gy = yout.grad();
      if (!gy) return;
      real* gx = xin.ensure_grad();
      const real* xd = xin.data();
      for (std::int64_t i = 0; i < n; ++i) {
        if (xd[i] > real(0)) gx[i] += gy[i];
      }
    });
  }
  return y;
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
  Tensor y(x.shape());
  const real* xd = x.data();
  real* yd = y.data();
  const std::int64_t n = x.size();
  for (std::int64_t i = 0; i < n; ++i) {
    const double v = static_cast<double>(xd[i]);
    const double s = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    yd[i] = static_cast<real>(s);
  }
  if (track(tape, x)) {
    y.set_requires_grad(true);
    Tensor xin = x, yout = y;
    tape.record(y, [xin, yout, n]() {
      const real* gy = yout.grad();
      if (!gy) return;
      real* gx = xin.ensure_grad();
      const real* yd = yout.data();
      for (std::int64_t i = 0; i < n; ++i) gx[i] += gy[i] * yd[i] * (real(1) - yd[i]);
    });
  }
  return y;
}

Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.ndim() != 2 || w.ndim() != 2 || b.ndim() != 1) {
    throw ShapeError("linear expects x:[N,D], w:[D,K], b:[K]");
  }
  const int n = x.dim(0), d = x.dim(1), k = w.dim(1);
  if (w.dim(0) != d || b.dim(0) != k) {
    throw ShapeError("linear shape mismatch: x " + shape_str(x.shape()) + ", w " +
                     shape_str(w.shape()) + ", b " + shape_str(b.shape()));
  }
  Tensor y({n, k});
  for (int i = 0; i < n; ++i) {
    real* yr = y.data() + static_cast<std::int64_t>(i) * k;
    for (int j = 0; j < k; ++j) yr[j] = b.data()[j];
    const real* xr = x.data() + static_cast<std::int64_t>(i) * d;
    for (int a = 0; a < d; ++a) {
      const real xv = xr[a];
      if (xv == real(0)) continue;
      const real* wr = w.data() + static_cast<std::int64_t>(a) * k;
      for (int j = 0; j < k; ++j) yr[j] += xv * wr[j];
    }
  }
  if (track(tape, x, w, b)) {
    y.set_requires_grad(true);
    Tensor xin = x, win = w, bin = b, yout = y;
    tape.record(y, [xin, win, bin, yout, n, d, k]() {
      const real* gy = yout.grad();
      if (!gy) return;
      if (bin.requires_grad()) {
        real* gb = bin.ensure_grad();
        for (int i = 0; i < n; ++i) {
          const real* gr = gy + static_cast<std::int64_t>(i) * k;
          for (int j = 0; j < k; ++j) gb[j] += gr[j];
        }
      }
      if (win.requires_grad()) {
        real* gw = win.ensure_grad();
        for (int i = 0; i < n; ++i) {
          const real* xr = xin.data() + static_cast<std::int64_t>(i) * d;
          const real* gr = gy + static_cast<std::int64_t>(i) * k;
          for (int a = 0; a < d; ++a) {
            const real xv = xr[a];
            if (xv == real(0)) continue;
            real* gwr = gw + static_cast<std::int64_t>(a) * k;
            for (int j = 0; j < k; ++j) gwr[j] += xv * gr[j];
          }
        }
      }
      if (xin.requires_grad()) {
        real* gx = xin.ensure_grad();
        for (int i = 0; i < n; ++i) {
          const real* gr = gy + static_cast<std::int64_t>(i) * k;
          real* gxr = gx + static_cast<std::int64_t>(i) * d;
          for (int a = 0; a < d; ++a) {
            const real* wr = win.data() + static_cast<std::int64_t>(a) * k;
            double acc = 0;
            for (int j = 0; j < k; ++j) acc += static_cast<double>(wr[j]) * gr[j];
            gxr[a] += static_cast<real>(acc);
          }
        }
      }
    });
  }
  return y;
}

namespace {

// Source coordinate and blend weights for align-corners interpolation.
inline void ac_coords(int out_i, int out_n, int in_n, int& lo, int& hi, real& frac) {
  if (out_n == 1 || in_n == 1) {
    lo = hi = 0;
    frac = real(0);
    return;
  }
  const double s = static_cast<double>(out_i) * (in_n - 1) / (out_n - 1);
  lo = static_cast<int>(s);
  if (lo >= in_n - 1) lo = in_n - 2;
  hi = lo + 1;
  frac = static_cast<real>(s - lo);
}

}  // namespace

Tensor bilinear_resize(Tape& tape, const Tensor& x, int out_h, int out_w) {
  require_4d(x, "bilinear_resize");
  if (out_h < 1 || out_w < 1) throw ShapeError("bilinear_resize output size must be >= 1");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor y({n, c, out_h, out_w});
  const real* xd = x.data();
  real* yd = y.data();
  for (int nc = 0; nc < n * c; ++nc) {
    const real* plane = xd + static_cast<std::int64_t>(nc) * h * w;
    real* out = yd + static_cast<std::int64_t>(nc) * out_h * out_w;
    for (int i = 0; i < out_h; ++i) {
      int y0, y1;
      real fy;
      ac_coords(i, out_h, h, y0, y1, fy);
      for (int j = 0; j < out_w; ++j) {
        int x0, x1;
        real fx;
        ac_coords(j, out_w, w, x0, x1, fx);
        const real v00 = plane[y0 * w + x0], v01 = plane[y0 * w + x1];
        const real v10 = plane[y1 * w + x0], v11 = plane[y1 * w + x1];
        out[i * out_w + j] = (real(1) - fy) * ((real(1) - fx) * v00 + fx * v01) +
                             fy * ((real(1) - fx) * v10 + fx * v11);
      }
    }
  }
  if (track(tape, x)) {
    y.set_requires_grad(true);
    Tensor xin = x, yout = y;
    tape.record(y, [xin, yout, n, c, h, w, out_h, out_w]() {
      const real* gy = yout.grad();
      if (!gy) return;
      real* gx = xin.ensure_grad();
      for (int nc = 0; nc < n * c; ++nc) {
        real* gplane = gx + static_cast<std::int64_t>(nc) * h * w;
        const real* gout = gy + static_cast<std::int64_t>(nc) * out_h * out_w;
        for (int i = 0; i < out_h; ++i) {
          int y0, y1;
          real fy;
          ac_coords(i, out_h, h, y0, y1, fy);
          for (int j = 0; j < out_w; ++j) {
            int x0, x1;
            real fx;
            ac_coords(j, out_w, w, x0, x1, fx);
            const real g = gout[i * out_w + j];
            gplane[y0 * w + x0] += (real(1) - fy) * (real(1) - fx) * g;
            gplane[y0 * w + x1] += (real(1) - fy) * fx * g;
            gplane[y1 * w + x0] += fy * (real(1) - fx) * g;
            gplane[y1 * w + x1] += fy * fx * g;
          }
        }
      }
    });
  }
  return y;
}

Tensor global_avg_pool(Tape& tape, const Tensor& x) {
  require_4d(x, "global_avg_pool");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  Tensor y({n, c});
  for (int i = 0; i < n * c; ++i) {
    const real* plane = x.data() + i * hw;
    double acc = 0;
    for (std::int64_t j = 0; j < hw; ++j) acc += plane[j];
    y.data()[i] = static_cast<real>(acc / static_cast<double>(hw));
  }
  if (track(tape, x)) {
    y.set_requires_grad(true);
    Tensor xin = x, yout = y;
    tape.record(y, [xin, yout, n, c, hw]() {
      const real* gy = yout.grad();
      if (!gy) return;
      real* gx = xin.ensure_grad();
      const real inv = real(1) / static_cast<real>(hw);
      for (int i = 0; i < n * c; ++i) {
        const real g = gy[i] * inv;
        real* gplane = gx + i * hw;
        for (std::int64_t j = 0; j < hw; ++j) gplane[j] += g;
      }
    });
  }
  return y;
}

Tensor concat_channels(Tape& tape, const std::vector<Tensor>& xs) {
  if (xs.empty()) throw ShapeError("concat_channels needs at least one input");
  const int n = xs[0].dim(0), h = xs[0].dim(2), w = xs[0].dim(3);
  int ctot = 0;
  bool any_grad = false;
  for (const Tensor& t : xs) {
    require_4d(t, "concat_channels");
    if (t.dim(0) != n || t.dim(2) != h || t.dim(3) != w) {
      throw ShapeError("concat_channels inputs must share N,H,W");
    }
    ctot += t.dim(1);
    any_grad = any_grad || t.requires_grad();
  }
  Tensor y({n, ctot, h, w});
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  for (int ni = 0; ni < n; ++ni) {
    std::int64_t cofs = 0;
    for (const Tensor& t : xs) {
      const std::int64_t nc = static_cast<std::int64_t>(t.dim(1)) * hw;
      std::memcpy(y.data() + (static_cast<std::int64_t>(ni) * ctot) * hw + cofs * hw,
                  t.data() + ni * nc, sizeof(real) * static_cast<std::size_t>(nc));
      cofs += t.dim(1);
    }
  }
  if (tape.recording() && any_grad) {
    y.set_requires_grad(true);
    std::vector<Tensor> ins = xs;
    Tensor yout = y;
    tape.record(y, [ins, yout, n, ctot, hw]() {
      const real* gy = yout.grad();
      if (!gy) return;
      for (int ni = 0; ni < n; ++ni) {
        std::int64_t cofs = 0;
        for (const Tensor& t : ins) {
          const std::int64_t nc = static_cast<std::int64_t>(t.dim(1)) * hw;
          if (t.requires_grad()) {
            real* gx = t.ensure_grad();
            const real* src = gy + (static_cast<std::int64_t>(ni) * ctot + cofs) * hw;
            real* dst = gx + ni * nc;
            for (std::int64_t i = 0; i < nc; ++i) dst[i] += src[i];
          }
          cofs += t.dim(1);
        }
      }
    });
  }
  return y;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add shape mismatch: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  Tensor y(a.shape());
  const std::int64_t n = a.size();
  for (std::int64_t i = 0; i < n; ++i) y.data()[i] = a.data()[i] + b.data()[i];
  if (track(tape, a, b)) {
    y.set_requires_grad(true);
    Tensor ain = a, bin = b, yout = y;
    tape.record(y, [ain, bin, yout, n]() {
      const real* gy = yout.grad();
      if (!gy) return;
      if (ain.requires_grad()) ain.accumulate_grad(gy, n);
      if (bin.requires_grad()) bin.accumulate_grad(gy, n);
    });
  }
  return y;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("mul shape mismatch: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  Tensor y(a.shape());
  const std::int64_t n = a.size();
  for (std::int64_t i = 0; i < n; ++i) y.data()[i] = a.data()[i] * b.data()[i];
  if (track(tape, a, b)) {
    y.set_requires_grad(true);
    Tensor ain = a, bin = b, yout = y;
    tape.record(y, [ain, bin, yout, n]() {
      const real* gy = yout.grad();
      if (!gy) return;
      if (ain.requires_grad()) {
        real* ga = ain.ensure_grad();
        for (std::int64_t i = 0; i < n; ++i) ga[i] += gy[i] * bin.data()[i];
      }
      if (bin.requires_grad()) {
        real* gb = bin.ensure_grad();
        for (std::int64_t i = 0; i < n; ++i) gb[i] += gy[i] * ain.data()[i];
      }
    });
  }
  return y;
}

Tensor scale(Tape& tape, const Tensor& x, real s) {
  Tensor y(x.shape());
  const std::int64_t n = x.size();
  for (std::int64_t i = 0; i < n; ++i) y.data()[i] = x.data()[i] * s;
  if (track(tape, x)) {
    y.set_requires_grad(true);
    Tensor xin = x, yout = y;
    tape.record(y, [xin, yout, n, s]() {
      const real* gy = yout.grad();
      if (!gy) return;
      real* gx = xin.ensure_grad();
      for (std::int64_t i = 0; i < n; ++i) gx[i] += gy[i] * s;
    });
  }
  return y;
}

Tensor sum(Tape& tape, const Tensor& x) {
  const std::int64_t n = x.size();
  double acc = 0;
  for (std::int64_t i = 0; i < n; ++i) acc += x.data()[i];
  Tensor y = Tensor::scalar(static_cast<real>(acc));
  y.set_exact_scalar(acc);
  if (track(tape, x)) {
    y.set_requires_grad(true);
    Tensor xin = x, yout = y;
    tape.record(y, [xin, yout, n]() {
      const real* gy = yout.grad();
      if (!gy) return;
      real* gx = xin.ensure_grad();
      for (std::int64_t i = 0; i < n; ++i) gx[i] += gy[0];
    });
  }
  return y;
}

Tensor slice_vec(Tape& tape, const Tensor& x, int offset, int len) {
  if (x.ndim() != 1) throw ShapeError("slice_vec expects a 1-D tensor");
  if (offset < 0 || len < 0 || offset + len > x.dim(0)) {
    throw ShapeError("slice_vec range [" + std::to_string(offset) + "," +
                     std::to_string(offset + len) + ") out of bounds for " + shape_str(x.shape()));
  }
  Tensor y({len});
  std::memcpy(y.data(), x.data() + offset, sizeof(real) * static_cast<std::size_t>(len));
  if (track(tape, x)) {
    y.set_requires_grad(true);
    Tensor xin = x, yout = y;
    tape.record(y, [xin, yout, offset, len]() {
      const real* gy = yout.grad();
      if (!gy) return;
      real* gx = xin.ensure_grad();
      for (int i = 0; i < len; ++i) gx[offset + i] += gy[i];
    });
  }
  return y;
}

Tensor reshape(Tape& tape, const Tensor& x, std::vector<int> shape) {
  if (shape_size(shape) != x.size()) {
    throw ShapeError("reshape " + shape_str(x.shape()) + " -> " + shape_str(shape) +
                     " changes element count");
  }
  Tensor y = Tensor::from(std::move(shape), x.vec());
  if (track(tape, x)) {
    y.set_requires_grad(true);
    Tensor xin = x, yout = y;
    tape.record(y, [xin, yout]() {
      const real* gy = yout.grad();
      if (!gy) return;
      xin.accumulate_grad(gy, yout.size());
    });
  }
  return y;
}

}  // namespace modseg
