#include "modseg/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace modseg {

std::int64_t shape_size(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(std::vector<int> shape, real fill) {
  const auto n = shape_size(shape);
  node_ = std::make_shared<detail::TensorNode>();
  node_->shape = std::move(shape);
  node_->data.assign(static_cast<std::size_t>(n), fill);
}

Tensor Tensor::from(std::vector<int> shape, std::vector<real> data) {
  if (shape_size(shape) != static_cast<std::int64_t>(data.size())) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  }
  Tensor t;
  t.node_ = std::make_shared<detail::TensorNode>();
  t.node_->shape = std::move(shape);
  t.node_->data = std::move(data);
  return t;
}

real Tensor::item() const {
  if (size() != 1) {
    throw ContractError("item() requires a scalar tensor, got shape " + shape_str(shape()));
  }
  return node_->data[0];
}

double Tensor::scalar_value() const {
  if (size() != 1) {
    throw ContractError("scalar_value() requires a scalar tensor, got shape " + shape_str(shape()));
  }
  return node_->has_exact ? node_->exact : static_cast<double>(node_->data[0]);
}

void Tensor::set_exact_scalar(double v) {
  if (size() != 1) throw ContractError("set_exact_scalar() requires a scalar tensor");
  node_->exact = v;
  node_->has_exact = true;
}

real* Tensor::ensure_grad() const {
  if (node_->grad.size() != node_->data.size()) {
    node_->grad.assign(node_->data.size(), real(0));
  }
  return node_->grad.data();
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) {
    std::fill(node_->grad.begin(), node_->grad.end(), real(0));
  }
}

void Tensor::accumulate_grad(const real* g, std::int64_t n) const {
  if (n != size()) throw ShapeError("gradient size mismatch");
  real* dst = ensure_grad();
  for (std::int64_t i = 0; i < n; ++i) dst[i] += g[i];
}

Tensor Tensor::clone() const {
  Tensor t;
  t.node_ = std::make_shared<detail::TensorNode>();
  t.node_->shape = node_->shape;
  t.node_->data = node_->data;
  t.node_->requires_grad = node_->requires_grad;
  return t;
}

void Tape::record(const Tensor& output, std::function<void()> backward_fn) {
  if (!recording_) return;
  if (!outputs_.insert(output.node_id()).second) {
    throw ContractError("tensor recorded as the output of two ops on one tape");
  }
  entries_.push_back(Entry{output, std::move(backward_fn)});
}

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw ContractError("backward() requires a scalar loss, got shape " + shape_str(loss.shape()));
  }
  if (outputs_.find(loss.node_id()) == outputs_.end()) {
    throw ContractError("loss tensor is not an output recorded on this tape");
  }
  loss.ensure_grad()[0] += real(1);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    it->fn();
  }
  clear();
}

void Tape::clear() {
  entries_.clear();
  outputs_.clear();
}

}  // namespace modseg
