#pragma once

// Dense row-major tensors with reverse-mode differentiation.
//
// A Tensor is a cheap handle onto a shared node. Every primitive in ops.hpp,
// sampling.hpp and deform_attn.hpp creates a new node that remembers its
// inputs and a closure propagating the output gradient back to them. The
// recorded graph is the gradient tape: backward() orders the nodes reachable
// from the loss topologically and replays the closures in reverse.

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stda {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
class Tensor;

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until first written
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads self.grad and accumulates into the parents' grads.
  std::function<void(const Node& self)> backward_fn;

  bool is_leaf() const { return parents.empty(); }
  std::span<T> grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad;
  }
};

// Builds the output node of a primitive. `inputs` are the differentiable
// arguments; the closure is kept only if one of them requires grad and graph
// recording is enabled.
template <typename T>
Tensor<T> make_result(const char* op, Shape shape, std::vector<T> data,
                      std::initializer_list<const Tensor<T>*> inputs,
                      std::function<void(const Node<T>&)> backward_fn);

template <typename T>
Tensor<T> make_result(const char* op, Shape shape, std::vector<T> data,
                      const std::vector<Tensor<T>>& inputs,
                      std::function<void(const Node<T>&)> backward_fn);

// Gradient buffer of an input if it participates in differentiation,
// otherwise an empty span.
template <typename T>
std::span<T> grad_of(const Tensor<T>& input);

}  // namespace detail

/// Disables graph recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<T> data,
                          bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  size_t ndim() const { return shape().size(); }
  /// Size of `axis`; negative values count from the end.
  int64_t dim(int axis) const;
  int64_t numel() const;

  std::span<const T> data() const;
  /// Writable values. Only leaves may be mutated (parameter init, optimizer).
  std::span<T> mutable_data();
  T item() const;
  T at(std::initializer_list<int64_t> index) const;

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool has_grad() const;
  /// Accumulated gradient; zeros if nothing has been written yet.
  std::vector<T> grad() const;
  std::span<T> mutable_grad();
  void zero_grad();

  /// Reverse pass from a scalar; leaf gradients accumulate across calls.
  void backward() const;

  /// Copy of the values with no graph history.
  Tensor detach() const;
  template <typename U>
  Tensor<U> cast() const;

  const char* op_name() const;
  const std::shared_ptr<detail::Node<T>>& node_ptr() const { return node_; }

  explicit Tensor(std::shared_ptr<detail::Node<T>> node)
      : node_(std::move(node)) {}

 private:
  const detail::Node<T>& node() const;
  std::shared_ptr<detail::Node<T>> node_;
};

template <typename T>
template <typename U>
Tensor<U> Tensor<T>::cast() const {
  auto src = data();
  std::vector<U> out(src.begin(), src.end());
  return Tensor<U>::from_data(shape(), std::move(out));
}

/// Throws NumericError naming `op` if any value is NaN or infinite.
template <typename T>
void check_finite(const char* op, std::span<const T> values);

}  // namespace stda
