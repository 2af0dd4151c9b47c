#pragma once

#include <vector>

#include "modseg/tensor.hpp"

namespace modseg {

enum class Padding { Same, Valid };

// Cross-correlation with per-channel bias, stride 1. Same padding requires
// odd kernels. x:[N,Cin,H,W], w:[Cout,Cin,kh,kw], b:[Cout].
Tensor conv2d(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b,
              Padding padding = Padding::Same);

// 2x2 non-overlapping max; H and W must be even. Backward routes the
// gradient to the argmax (first occurrence in row-major window order).
Tensor maxpool2(Tape& tape, const Tensor& x);

Tensor relu(Tape& tape, const Tensor& x);
Tensor sigmoid(Tape& tape, const Tensor& x);

// x:[N,D] * w:[D,K] + b:[K].
Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b);

// Align-corners bilinear interpolation over the two trailing dims of
// [N,C,H,W]; corner pixels map exactly, out size >= 1.
Tensor bilinear_resize(Tape& tape, const Tensor& x, int out_h, int out_w);

// [N,C,H,W] -> [N,C].
Tensor global_avg_pool(Tape& tape, const Tensor& x);

// Concatenate along the channel dim; all inputs share N,H,W.
Tensor concat_channels(Tape& tape, const std::vector<Tensor>& xs);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& x, real s);

// Sum of all elements -> scalar. Accumulates in double for stability.
Tensor sum(Tape& tape, const Tensor& x);

// Contiguous slice of a 1-D tensor.
Tensor slice_vec(Tape& tape, const Tensor& x, int offset, int len);

Tensor reshape(Tape& tape, const Tensor& x, std::vector<int> shape);

}  // namespace modseg
