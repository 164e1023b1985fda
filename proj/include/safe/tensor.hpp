#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "safe/error.hpp"

namespace safe {

using Real = double;
using Index = Eigen::Index;
using Shape = std::vector<Index>;

// Flat row-major storage; 2-D tensors map onto row-major Eigen matrices.
using Array = Eigen::Array<Real, Eigen::Dynamic, 1>;
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;

Index shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

struct TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

/// A dense 64-bit-real tensor handle with optional reverse-mode gradient.
///
/// Tensor is a cheap shared handle onto a node in a dynamically recorded
/// computation graph: every operation in ops.hpp produces a fresh node whose
/// backward closure knows how to push gradients into its parents. Calling
/// backward() on a scalar result replays the recorded graph in reverse.
/// Leaf tensors (no parents) with requires_grad=true act as parameters:
/// their grad buffers accumulate additively across backward() calls until
/// zero_grad() is called.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr n) : node_(std::move(n)) {}

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, Real v, bool requires_grad = false);
  static Tensor from(const Shape& shape, std::vector<Real> data,
                     bool requires_grad = false);
  static Tensor from_array(const Shape& shape, Array data,
                           bool requires_grad = false);
  static Tensor scalar(Real v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  Index size() const;
  Index rows() const;  // 2-D only
  Index cols() const;  // 2-D only
  bool requires_grad() const;

  const Array& value() const;
  Array& value();
  Real item() const;  // scalar only

  bool has_grad() const;
  const Array& grad() const;  // throws if not populated
  void zero_grad();           // zeroes (keeps allocation) or no-op if absent

  /// Value-only copy, disconnected from any recorded graph.
  Tensor detach() const;

  ConstMatMap mat() const;  // 2-D view of the value
  MatMap mat();

  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

struct TensorNode {
  Shape shape;
  Array value;
  Array grad;  // size 0 until populated by backward()
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  // Reads this->grad and accumulates into parents' grads.
  std::function<void(TensorNode&)> backprop;
};

// Zero-initializes n.grad if empty, then adds expr into it.
void accumulate_grad(TensorNode& n, const Array& g);

/// Reverse-mode sweep from a scalar loss. Interior node gradients are local
/// to a single sweep; leaf gradients (parameters, constants touched by the
/// graph) accumulate additively across sweeps.
void backward(const Tensor& loss);

/// A named trainable tensor; the name determines its checkpoint slot.
struct Parameter {
  std::string name;
  Tensor tensor;
};

// Ordered name -> tensor map; iteration order fixes checkpoint blob order
// and Adam update order.
using ParamMap = std::map<std::string, Tensor>;

void zero_grads(ParamMap& params);

}  // namespace safe
