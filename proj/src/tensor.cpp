#include "safe/tensor.hpp"

#include <sstream>
#include <unordered_set>

namespace safe {

Index shape_numel(const Shape& s) {
  Index n = 1;
  for (Index d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << "x";
    os << s[i];
  }
  os << "]";
  return os.str();
}

static NodePtr make_leaf(Shape shape, Array value, bool requires_grad) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
  return Tensor(make_leaf(shape, Array::Zero(shape_numel(shape)), requires_grad));
}

Tensor Tensor::full(const Shape& shape, Real v, bool requires_grad) {
  return Tensor(make_leaf(shape, Array::Constant(shape_numel(shape), v), requires_grad));
}

Tensor Tensor::from(const Shape& shape, std::vector<Real> data, bool requires_grad) {
  if (static_cast<Index>(data.size()) != shape_numel(shape))
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  Array a(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) a[static_cast<Index>(i)] = data[i];
  return Tensor(make_leaf(shape, std::move(a), requires_grad));
}

Tensor Tensor::from_array(const Shape& shape, Array data, bool requires_grad) {
  if (data.size() != shape_numel(shape))
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  return Tensor(make_leaf(shape, std::move(data), requires_grad));
}

Tensor Tensor::scalar(Real v, bool requires_grad) {
  return Tensor(make_leaf({1}, Array::Constant(1, v), requires_grad));
}

const Shape& Tensor::shape() const { return node_->shape; }
Index Tensor::size() const { return node_->value.size(); }

Index Tensor::rows() const {
  if (node_->shape.size() != 2)
    throw ShapeError("rows() on non-2-D tensor " + shape_str(node_->shape));
  return node_->shape[0];
}

Index Tensor::cols() const {
  if (node_->shape.size() != 2)
    throw ShapeError("cols() on non-2-D tensor " + shape_str(node_->shape));
  return node_->shape[1];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }

const Array& Tensor::value() const { return node_->value; }
Array& Tensor::value() { return node_->value; }

Real Tensor::item() const {
  if (size() != 1)
    throw ShapeError("item() on non-scalar tensor " + shape_str(node_->shape));
  return node_->value[0];
}

bool Tensor::has_grad() const { return node_->grad.size() == node_->value.size(); }

const Array& Tensor::grad() const {
  if (!has_grad()) throw InternalError("gradient not populated");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (has_grad()) node_->grad.setZero();
}

Tensor Tensor::detach() const {
  return Tensor(make_leaf(node_->shape, node_->value, false));
}

ConstMatMap Tensor::mat() const {
  if (node_->shape.size() != 2)
    throw ShapeError("mat() on non-2-D tensor " + shape_str(node_->shape));
  return ConstMatMap(node_->value.data(), node_->shape[0], node_->shape[1]);
}

MatMap Tensor::mat() {
  if (node_->shape.size() != 2)
    throw ShapeError("mat() on non-2-D tensor " + shape_str(node_->shape));
  return MatMap(node_->value.data(), node_->shape[0], node_->shape[1]);
}

void accumulate_grad(TensorNode& n, const Array& g) {
  if (n.grad.size() == 0) n.grad = Array::Zero(n.value.size());
  n.grad += g;
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw ShapeError("backward() requires a scalar loss");
  TensorNode* root = loss.node().get();
  if (!root->requires_grad) return;  // nothing reachable to differentiate

  // Iterative post-order DFS over parents; the reversed list runs children
  // before parents, which is the replay order for the recorded tape.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [n, i] = stack.back();
    bool descended = false;
    while (i < n->parents.size()) {
      TensorNode* p = n->parents[i++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
        descended = true;
        break;
      }
    }
    if (!descended && (stack.back().second >= stack.back().first->parents.size())) {
      order.push_back(stack.back().first);
      stack.pop_back();
    }
  }

  // Interior gradients are per-sweep scratch; leaf gradients persist so
  // parameters accumulate across sweeps.
  for (TensorNode* n : order) {
    if (n->backprop) n->grad = Array::Zero(n->value.size());
  }
  if (root->backprop) {
    root->grad = Array::Constant(1, 1.0);
  } else {
    accumulate_grad(*root, Array::Constant(1, 1.0));
  }

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backprop && n->grad.size() != 0) n->backprop(*n);
    if (!n->backprop && n->grad.size() == 0) {
      // Reachable requires_grad leaf that received no contribution; still
      // counts as populated per the backward contract.
      n->grad = Array::Zero(n->value.size());
    }
  }
}

void zero_grads(ParamMap& params) {
  for (auto& [name, t] : params) t.zero_grad();
}

}  // namespace safe
