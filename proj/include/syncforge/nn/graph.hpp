#pragma once

#include <functional>
#include <string>
#include <vector>

#include "syncforge/nn/tensor.hpp"

namespace syncforge::nn {

/// A trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, std::vector<int> shape)
      : name(std::move(n)), value(shape), grad(std::move(shape)) {}
  void zero_grad() { grad.fill(0.0); }
};

class Graph;

/// Handle to a node recorded on a Graph.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const Tensor& value() const;
  const std::vector<int>& shape() const { return value().shape(); }
};

/// Tape of executed operations. Nodes are appended in execution order, so
/// the tape is already topologically sorted; backward walks it in reverse
/// and accumulates gradients additively.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, const Tensor& out_grad)>;

  /// With `enable_grad` false no backward state is kept (inference).
  explicit Graph(bool enable_grad = true) : grad_enabled_(enable_grad) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Tensor t);
  /// Leaf whose gradient is kept on the graph (see grad()).
  Var variable(Tensor t);
  /// Leaf bound to a parameter; backward adds into p.grad.
  Var parameter(Parameter& p);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  /// Gradient of a node after backward(); empty if none flowed into it.
  const Tensor& grad(Var v) const { return nodes_.at(v.id).grad; }

  /// Reverse pass from a single-element node.
  void backward(Var root);

  bool grad_enabled() const noexcept { return grad_enabled_; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Record an operator output. `inputs` decide whether the node needs a
  /// gradient; the backward closure is dropped otherwise. Throws NonFinite
  /// if the value contains NaN or Inf.
  Var record(const char* op, Tensor value, std::initializer_list<Var> inputs, BackwardFn back);

  /// Gradient buffer of an input node, allocated (zeroed) on first use.
  Tensor& grad_of(int id);

 private:
  struct Node {
    std::string op;
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  bool grad_enabled_;
};

}  // namespace syncforge::nn
