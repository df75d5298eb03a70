#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace photogeo {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

Index shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

template <typename Scalar>
using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

namespace detail {

// One vertex of the recorded operation graph. `seq` is the position on the
// per-thread tape; replaying in descending `seq` order is a valid reverse
// topological order because a node is always created after its inputs.
template <typename Scalar>
struct Node {
  Shape shape;
  Array<Scalar> value;
  Array<Scalar> grad;
  bool requires_grad = false;
  std::uint64_t seq = 0;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
  std::string op;

  bool is_leaf() const { return !backward; }

  // Adds `g` into this node's gradient, allocating it on first use.
  template <typename Derived>
  void accumulate(const Eigen::ArrayBase<Derived>& g) {
    if (!requires_grad) return;
    if (grad.size() == 0) grad = Array<Scalar>::Zero(value.size());
    grad += g;
  }
  Array<Scalar>& grad_buffer() {
    if (grad.size() == 0) grad = Array<Scalar>::Zero(value.size());
    return grad;
  }
};

std::uint64_t next_sequence();

}  // namespace detail

/// Dense row-major n-d array with an optional gradient slot.
///
/// A Tensor is a cheap handle; copies share the same node. Values are
/// immutable once an operation has consumed them, except through
/// `mutable_value()` which is reserved for parameter updates between graphs.
template <typename Scalar>
class Tensor {
 public:
  using NodeType = detail::Node<Scalar>;
  using ArrayType = Array<Scalar>;

  Tensor() = default;

  static Tensor from_array(Shape shape, ArrayType values,
                           bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Scalar value, bool requires_grad = false);
  static Tensor scalar(Scalar value, bool requires_grad = false);
  static Tensor from_vector(Shape shape, const std::vector<Scalar>& values,
                            bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node().shape; }
  Index dim(std::size_t i) const { return node().shape.at(i); }
  std::size_t ndim() const { return node().shape.size(); }
  Index size() const { return node().value.size(); }

  const ArrayType& value() const { return node().value; }
  ArrayType& mutable_value() { return node().value; }
  Scalar item() const;
  Scalar operator[](Index i) const { return node().value[i]; }

  bool requires_grad() const { return node().requires_grad; }
  bool has_grad() const { return node().grad.size() != 0; }
  /// Empty array when no gradient has reached this tensor.
  const ArrayType& grad() const { return node().grad; }
  void clear_grad() { node().grad.resize(0); }
  void set_requires_grad(bool on) { node().requires_grad = on; }

  /// A new leaf sharing no graph history, holding a copy of the values.
  Tensor detach() const;
  const std::string& op() const { return node().op; }

  NodeType& node() const {
    if (!node_) throw std::logic_error("use of undefined tensor");
    return *node_;
  }
  const std::shared_ptr<NodeType>& node_ptr() const { return node_; }

  /// Creates the output of a differentiable operation. The backward closure
  /// is only recorded when at least one input requires a gradient.
  static Tensor make_result(Shape shape, ArrayType value,
                            std::vector<Tensor> inputs, std::string_view op,
                            std::function<void(NodeType&)> backward);

 private:
  explicit Tensor(std::shared_ptr<NodeType> node) : node_(std::move(node)) {}
  std::shared_ptr<NodeType> node_;
};

/// Reverse-mode sweep from a scalar loss. Interior gradients are reset on
/// every call; leaf gradients accumulate across calls.
template <typename Scalar>
void backward(const Tensor<Scalar>& loss);

/// Row-major offset of a 4-d NCHW index.
inline Index offset4(const Shape& s, Index n, Index c, Index h, Index w) {
  return ((n * s[1] + c) * s[2] + h) * s[3] + w;
}

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace photogeo
