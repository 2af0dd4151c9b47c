#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "modseg/error.hpp"

namespace modseg {

// Element type of all tensors. Defaults to 32-bit; a 64-bit build
// (-DMODSEG_REAL_DOUBLE) exists for high-precision gradient checking.
#ifdef MODSEG_REAL_DOUBLE
using real = double;
#else
using real = float;
#endif

std::int64_t shape_size(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

namespace detail {
struct TensorNode {
  std::vector<int> shape;
  std::vector<real> data;
  std::vector<real> grad;  // empty until a backward pass touches it
  bool requires_grad = false;
  // Reductions stash their pre-rounding value here so scalar consumers
  // (gradient checking, loss curves) see full precision in 32-bit builds.
  double exact = 0.0;
  bool has_exact = false;
};
}  // namespace detail

// Dense row-major tensor. The handle is cheap to copy and shares storage;
// clone() makes an independent copy. Safe to share across threads for reads.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, real fill = real(0));
  static Tensor from(std::vector<int> shape, std::vector<real> data);
  static Tensor scalar(real v) { return from({1}, {v}); }
  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor ones(std::vector<int> shape) { return Tensor(std::move(shape), real(1)); }

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
  std::int64_t size() const { return static_cast<std::int64_t>(node_->data.size()); }

  real* data() { return node_->data.data(); }
  const real* data() const { return node_->data.data(); }
  std::vector<real>& vec() { return node_->data; }
  const std::vector<real>& vec() const { return node_->data; }

  real item() const;

  // Scalar value at the best available precision (see TensorNode::exact).
  double scalar_value() const;
  void set_exact_scalar(double v);

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool v) {
    node_->requires_grad = v;
    return *this;
  }

  // Gradient buffer; null until ensure_grad()/backward allocates it.
  // Grad mutation is shallow-const: the handle shares its node like a
  // shared_ptr, and backward closures hold tensors by value.
  const real* grad() const { return node_->grad.empty() ? nullptr : node_->grad.data(); }
  std::vector<real>& grad_vec() { return node_->grad; }
  const std::vector<real>& grad_vec() const { return node_->grad; }
  real* ensure_grad() const;
  void zero_grad();
  void accumulate_grad(const real* g, std::int64_t n) const;

  // Deep copy of the values; grad buffer is not copied.
  Tensor clone() const;

  bool same_node(const Tensor& other) const { return node_ == other.node_; }
  const void* node_id() const { return node_.get(); }

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

// Named trainable tensor; names are unique and hierarchical within a model.
struct Parameter {
  std::string name;
  Tensor value;
};

// Ordered record of executed ops with their backward rules. Single-owner:
// one tape must not be shared between concurrent forward passes. With
// recording off, ops run forward-only and the tape stays empty.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t size() const { return entries_.size(); }

  // Called by ops after computing their forward result. The closure owns
  // handles to every input it needs and accumulates into their grads.
  void record(const Tensor& output, std::function<void()> backward_fn);

  // Reverse replay from a scalar loss; seeds d(loss)/d(loss)=1, accumulates
  // gradients additively into every reachable requires_grad tensor, then
  // clears the tape.
  void backward(const Tensor& loss);

  void clear();

 private:
  struct Entry {
    Tensor output;
    std::function<void()> fn;
  };
  std::vector<Entry> entries_;
  std::unordered_set<const void*> outputs_;
  bool recording_ = true;
};

// True when the op executed under `tape` must register a backward rule.
inline bool track(const Tape& tape, const Tensor& a) {
  return tape.recording() && a.requires_grad();
}
inline bool track(const Tape& tape, const Tensor& a, const Tensor& b) {
  return tape.recording() && (a.requires_grad() || b.requires_grad());
}
inline bool track(const Tape& tape, const Tensor& a, const Tensor& b, const Tensor& c) {
  return tape.recording() && (a.requires_grad() || b.requires_grad() || c.requires_grad());
}

}  // namespace modseg
