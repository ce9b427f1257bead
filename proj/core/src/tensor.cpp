#include "stda/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace stda {

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {
thread_local bool g_grad_enabled = true;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_mode_enabled() { return g_grad_enabled; }

template <typename T>
void check_finite(const char* op, std::span<const T> values) {
  for (T v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value produced by ") + op);
    }
  }
}

namespace detail {

template <typename T>
static Tensor<T> finish_result(const char* op, Shape shape, std::vector<T> data,
                               std::vector<std::shared_ptr<Node<T>>> parents,
                               std::function<void(const Node<T>&)> backward_fn) {
  if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
    throw ShapeError(std::string(op) + ": data size does not match shape " + shape_str(shape));
  }
  check_finite<T>(op, data);
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  bool needs = false;
  if (grad_mode_enabled()) {
    for (const auto& p : parents) needs = needs || p->requires_grad;
  }
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> make_result(const char* op, Shape shape, std::vector<T> data,
                      std::initializer_list<const Tensor<T>*> inputs,
                      std::function<void(const Node<T>&)> backward_fn) {
  std::vector<std::shared_ptr<Node<T>>> parents;
  for (const Tensor<T>* t : inputs) {
    if (t && t->defined()) parents.push_back(t->node_ptr());
  }
  return finish_result<T>(op, std::move(shape), std::move(data), std::move(parents),
                          std::move(backward_fn));
}

template <typename T>
Tensor<T> make_result(const char* op, Shape shape, std::vector<T> data,
                      const std::vector<Tensor<T>>& inputs,
                      std::function<void(const Node<T>&)> backward_fn) {
  std::vector<std::shared_ptr<Node<T>>> parents;
  for (const Tensor<T>& t : inputs) {
    if (t.defined()) parents.push_back(t.node_ptr());
  }
  return finish_result<T>(op, std::move(shape), std::move(data), std::move(parents),
                          std::move(backward_fn));
}

template <typename T>
std::span<T> grad_of(const Tensor<T>& input) {
  if (!input.defined() || !input.node_ptr()->requires_grad) return {};
  return input.node_ptr()->grad_buffer();
}

}  // namespace detail

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  std::vector<T> data(static_cast<size_t>(shape_numel(shape)), value);
  return from_data(std::move(shape), std::move(data), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from_data(Shape shape, std::vector<T> data, bool requires_grad) {
  if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  }
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

template <typename T>
const detail::Node<T>& Tensor<T>::node() const {
  if (!node_) throw std::logic_error("use of undefined tensor");
  return *node_;
}

template <typename T>
const Shape& Tensor<T>::shape() const {
  return node().shape;
}

template <typename T>
int64_t Tensor<T>::dim(int axis) const {
  const auto& s = shape();
  int n = static_cast<int>(s.size());
  int a = axis < 0 ? axis + n : axis;
  if (a < 0 || a >= n) throw ShapeError("axis out of range for shape " + shape_str(s));
  return s[static_cast<size_t>(a)];
}

template <typename T>
int64_t Tensor<T>::numel() const {
  return static_cast<int64_t>(node().data.size());
}

template <typename T>
std::span<const T> Tensor<T>::data() const {
  return node().data;
}

template <typename T>
std::span<T> Tensor<T>::mutable_data() {
  if (!node().is_leaf()) throw std::logic_error("only leaf tensors may be mutated");
  return node_->data;
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return node().data[0];
}

template <typename T>
T Tensor<T>::at(std::initializer_list<int64_t> index) const {
  const auto& s = shape();
  if (index.size() != s.size()) throw ShapeError("index rank mismatch");
  int64_t flat = 0;
  size_t i = 0;
  for (int64_t v : index) {
    if (v < 0 || v >= s[i]) throw ShapeError("index out of range");
    flat = flat * s[i] + v;
    ++i;
  }
  return node().data[static_cast<size_t>(flat)];
}

template <typename T>
bool Tensor<T>::requires_grad() const {
  return node().requires_grad;
}

template <typename T>
void Tensor<T>::set_requires_grad(bool value) {
  if (!node().is_leaf()) throw std::logic_error("requires_grad can only be set on leaves");
  node_->requires_grad = value;
}

template <typename T>
bool Tensor<T>::has_grad() const {
  return !node().grad.empty();
}

template <typename T>
std::vector<T> Tensor<T>::grad() const {
  const auto& n = node();
  if (n.grad.empty()) return std::vector<T>(n.data.size(), T(0));
  return n.grad;
}

template <typename T>
std::span<T> Tensor<T>::mutable_grad() {
  node();
  return node_->grad_buffer();
}

template <typename T>
void Tensor<T>::zero_grad() {
  node();
  std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
void Tensor<T>::backward() const {
  if (numel() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " + shape_str(shape()));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order (inputs first).
  using NodeT = detail::Node<T>;
  std::vector<NodeT*> order;
  std::unordered_set<NodeT*> visited;
  std::vector<std::pair<NodeT*, size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      NodeT* p = n->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  for (NodeT* n : order) {
    if (!n->is_leaf()) n->grad.assign(n->data.size(), T(0));
  }
  node_->grad_buffer()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  const auto& n = node();
  return from_data(n.shape, n.data);
}

template <typename T>
const char* Tensor<T>::op_name() const {
  return node().op;
}

template class Tensor<float>;
template class Tensor<double>;
template void check_finite<float>(const char*, std::span<const float>);
template void check_finite<double>(const char*, std::span<const double>);

namespace detail {
template Tensor<float> make_result(const char*, Shape, std::vector<float>,
                                   std::initializer_list<const Tensor<float>*>,
                                   std::function<void(const Node<float>&)>);
template Tensor<double> make_result(const char*, Shape, std::vector<double>,
                                    std::initializer_list<const Tensor<double>*>,
                                    std::function<void(const Node<double>&)>);
template Tensor<float> make_result(const char*, Shape, std::vector<float>,
                                   const std::vector<Tensor<float>>&,
                                   std::function<void(const Node<float>&)>);
template Tensor<double> make_result(const char*, Shape, std::vector<double>,
                                    const std::vector<Tensor<double>>&,
                                    std::function<void(const Node<double>&)>);
template std::span<float> grad_of(const Tensor<float>&);
template std::span<double> grad_of(const Tensor<double>&);
}  // namespace detail

}  // namespace stda
