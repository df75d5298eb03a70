#include "photogeo/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace photogeo {

Index shape_size(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) {
    if (d < 0) throw std::invalid_argument("negative dimension in shape");
    n *= d;
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace detail {
std::uint64_t next_sequence() {
  thread_local std::uint64_t counter = 0;
  return ++counter;
}
}  // namespace detail

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::from_array(Shape shape, ArrayType values,
                                          bool requires_grad) {
  if (shape_size(shape) != values.size()) {
    throw std::invalid_argument("shape " + shape_string(shape) +
                                " does not match " +
                                std::to_string(values.size()) + " elements");
  }
  auto node = std::make_shared<NodeType>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  node->seq = detail::next_sequence();
  node->op = "leaf";
  return Tensor(std::move(node));
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::zeros(Shape shape, bool requires_grad) {
  const Index n = shape_size(shape);
  return from_array(std::move(shape), ArrayType::Zero(n), requires_grad);
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::full(Shape shape, Scalar value,
                                    bool requires_grad) {
  const Index n = shape_size(shape);
  return from_array(std::move(shape), ArrayType::Constant(n, value),
                    requires_grad);
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::scalar(Scalar value, bool requires_grad) {
  return full({}, value, requires_grad);
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::from_vector(Shape shape,
                                           const std::vector<Scalar>& values,
                                           bool requires_grad) {
  ArrayType a = Eigen::Map<const ArrayType>(values.data(),
                                            static_cast<Index>(values.size()));
  return from_array(std::move(shape), std::move(a), requires_grad);
}

template <typename Scalar>
Scalar Tensor<Scalar>::item() const {
  if (size() != 1) {
    throw std::invalid_argument("item() on tensor of shape " +
                                shape_string(shape()));
  }
  return node().value[0];
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::detach() const {
  return from_array(shape(), value(), false);
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::make_result(
    Shape shape, ArrayType value, std::vector<Tensor> inputs,
    std::string_view op, std::function<void(NodeType&)> backward) {
  auto node = std::make_shared<NodeType>();
  if (shape_size(shape) != value.size()) {
    throw std::logic_error(std::string(op) + ": result shape " +
                           shape_string(shape) + " does not match values");
  }
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  const bool any = std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) {
    return t.defined() && t.requires_grad();
  });
  if (any) {
    node->requires_grad = true;
    node->parents.reserve(inputs.size());
    for (auto& t : inputs) node->parents.push_back(t.node_);
    node->backward = std::move(backward);
  }
  node->seq = detail::next_sequence();
  return Tensor(std::move(node));
}

template <typename Scalar>
void backward(const Tensor<Scalar>& loss) {
  using NodeT = detail::Node<Scalar>;
  if (loss.size() != 1) {
    throw std::invalid_argument("backward() needs a scalar loss, got shape " +
                                shape_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;

  std::vector<NodeT*> order;
  std::unordered_set<NodeT*> seen;
  std::vector<NodeT*> stack{&loss.node()};
  seen.insert(stack.back());
  while (!stack.empty()) {
    NodeT* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (auto& p : n->parents) {
      if (!p || !p->requires_grad) continue;
      if (p->seq >= n->seq) throw std::logic_error("cycle in operation graph");
      if (seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(),
            [](const NodeT* a, const NodeT* b) { return a->seq > b->seq; });
  for (NodeT* n : order) {
    if (!n->is_leaf()) n->grad = Array<Scalar>::Zero(n->value.size());
  }
  loss.node().grad_buffer() += Scalar(1);
  for (NodeT* n : order) {
    if (n->is_leaf()) continue;
    n->backward(*n);
  }
}

template class Tensor<float>;
template class Tensor<double>;
template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);

}  // namespace photogeo
