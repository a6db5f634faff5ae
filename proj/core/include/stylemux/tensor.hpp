#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "stylemux/errors.hpp"
#include "stylemux/rng.hpp"

namespace stylemux::nn {

using Shape = std::vector<int>;

inline int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) {
    if (d <= 0) throw DimensionError("shape dimensions must be positive");
    n *= d;
  }
  return n;
}

// One value holder in the computation graph. Data and gradient are flat
// row-major buffers; grad stays empty until something accumulates into it.
template <class T>
struct NodeT {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), T(0));
  }
};

template <class T>
class TensorT {
 public:
  TensorT() = default;
  explicit TensorT(std::shared_ptr<NodeT<T>> node) : node_(std::move(node)) {}

  static TensorT leaf(Shape shape, std::vector<T> values, bool requires_grad = false) {
    auto n = std::make_shared<NodeT<T>>();
    if (static_cast<int64_t>(values.size()) != shape_numel(shape)) {
      throw DimensionError("leaf: value count does not match shape");
    }
    n->shape = std::move(shape);
    n->data = std::move(values);
    n->requires_grad = requires_grad;
    return TensorT(std::move(n));
  }

  static TensorT zeros(Shape shape, bool requires_grad = false) {
    std::vector<T> v(static_cast<size_t>(shape_numel(shape)), T(0));
    return leaf(std::move(shape), std::move(v), requires_grad);
  }

  static TensorT full(Shape shape, T value) {
    std::vector<T> v(static_cast<size_t>(shape_numel(shape)), value);
    return leaf(std::move(shape), std::move(v), false);
  }

  static TensorT randu(Shape shape, Rng& rng, double lo, double hi, bool requires_grad = false) {
    std::vector<T> v(static_cast<size_t>(shape_numel(shape)));
    for (auto& x : v) x = static_cast<T>(rng.uniform(lo, hi));
    return leaf(std::move(shape), std::move(v), requires_grad);
  }

  const Shape& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int64_t size() const { return static_cast<int64_t>(node_->data.size()); }

  std::vector<T>& data() { return node_->data; }
  const std::vector<T>& data() const { return node_->data; }

  std::vector<T>& grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  const std::vector<T>& grad() const {
    node_->ensure_grad();
    return node_->grad;
  }
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
  }

  bool requires_grad() const { return node_->requires_grad; }

  T item() const {
    if (size() != 1) throw DimensionError("item: tensor is not scalar");
    return node_->data[0];
  }

  std::shared_ptr<NodeT<T>> node() const { return node_; }
  bool defined() const { return node_ != nullptr; }

 private:
  std::shared_ptr<NodeT<T>> node_;
};

// Reverse-mode tape. Forward ops append one backward step each, in execution
// order; backward() replays them once, in reverse. A tape and the tensors
// recorded on it belong to a single thread.
template <class T>
class TapeT {
 public:
  explicit TapeT(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }

  void record(std::function<void()> backward_step) {
    steps_.push_back(std::move(backward_step));
  }

  size_t size() const { return steps_.size(); }
  void clear() { steps_.clear(); }

  void run_backward() {
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
  }

 private:
  bool recording_;
  std::vector<std::function<void()>> steps_;
};

// Seeds the scalar loss with gradient 1 and replays the tape in reverse,
// accumulating into every requires_grad tensor reachable from the loss.
template <class T>
void backward(TapeT<T>& tape, TensorT<T>& loss) {
  if (loss.size() != 1) throw DimensionError("backward: loss must be scalar");
  if (tape.size() == 0) throw Error("backward: tape is empty");
  loss.grad()[0] += T(1);
  tape.run_backward();
}

using Tensor = TensorT<float>;
using Tape = TapeT<float>;

}  // namespace stylemux::nn

// The tensor vocabulary is used by every module; lift it out of nn.
namespace stylemux {
using nn::backward;
using nn::Shape;
using nn::shape_numel;
using nn::Tape;
using nn::TapeT;
using nn::Tensor;
using nn::TensorT;
}  // namespace stylemux
