#include "syncforge/nn/graph.hpp"

#include <algorithm>

#include "syncforge/errors.hpp"

namespace syncforge::nn {

const Tensor& Var::value() const { return graph->value(*this); }

Var Graph::constant(Tensor t) {
  nodes_.push_back(Node{"constant", std::move(t), {}, {}, nullptr, false});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::variable(Tensor t) {
  nodes_.push_back(Node{"variable", std::move(t), {}, {}, nullptr, grad_enabled_});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::parameter(Parameter& p) {
  nodes_.push_back(Node{"parameter:" + p.name, p.value, {}, {}, &p, grad_enabled_});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::record(const char* op, Tensor value, std::initializer_list<Var> inputs,
                  BackwardFn back) {
  if (!value.all_finite()) {
    throw NonFinite(op, std::string("non-finite value produced by operator '") + op + "'");
  }
  bool needs = false;
  if (grad_enabled_) {
    for (const Var& v : inputs) {
      if (v.graph != this) throw InvalidInput(std::string(op) + ": input from another graph");
      needs = needs || nodes_[v.id].requires_grad;
    }
  }
  nodes_.push_back(Node{op, std::move(value), {}, needs ? std::move(back) : BackwardFn{},
                        nullptr, needs});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Tensor& Graph::grad_of(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

void Graph::backward(Var root) {
  if (root.graph != this) throw InvalidInput("backward: root belongs to another graph");
  if (!grad_enabled_) throw InvalidInput("backward: graph was built without gradients");
  if (nodes_[root.id].value.numel() != 1) {
    throw InvalidInput("backward: root must be a scalar, got shape " +
                       shape_str(nodes_[root.id].value.shape()));
  }
  if (!nodes_[root.id].requires_grad) return;
  grad_of(root.id).fill(1.0);
  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) continue;
    if (n.backward) {
      n.backward(*this, n.grad);
      if (!nodes_[id].grad.all_finite()) {
        throw NonFinite(n.op, "non-finite gradient at operator '" + n.op + "'");
      }
    } else if (n.param) {
      auto& pg = n.param->grad;
      if (pg.shape() != n.value.shape()) pg = Tensor(n.value.shape(), 0.0);
      for (std::size_t i = 0; i < pg.numel(); ++i) pg[i] += n.grad[i];
    }
  }
}

}  // namespace syncforge::nn
