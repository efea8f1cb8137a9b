#include "cscae/graph.hpp"

#include <algorithm>

#include "cscae/errors.hpp"

namespace cscae {

void Node::ensure_grad() {
  Tensor& g = grad();
  if (!g.same_shape(val())) {
    g = Tensor::zeros(val().shape());
  }
}

void Node::accumulate_grad(const Tensor& g) {
  if (!g.same_shape(val()))
    throw ShapeError("gradient shape " + shape_str(g.shape()) + " does not match value " +
                     shape_str(val().shape()) + " in node " + label);
  ensure_grad();
  grad().array() += g.array();
}

Var Graph::input(Tensor value, std::string label, bool requires_grad) {
  auto node = std::make_unique<Node>();
  node->value_ = std::move(value);
  node->label = std::move(label);
  node->requires_grad = requires_grad;
  Node* raw = node.get();
  nodes_.push_back(std::move(node));
  return Var(raw);
}

Var Graph::parameter(Tensor& value, Tensor& grad, std::string label) {
  auto node = std::make_unique<Node>();
  node->ext_value_ = &value;
  node->ext_grad_ = &grad;
  node->label = std::move(label);
  node->requires_grad = true;
  Node* raw = node.get();
  nodes_.push_back(std::move(node));
  return Var(raw);
}

Var Graph::constant(Tensor value, std::string label) {
  return input(std::move(value), std::move(label), false);
}

void Graph::run_forward(Node* n) {
  n->leaf = false;
  for (Node* in : n->inputs)
    if (in->requires_grad) n->requires_grad = true;
  n->recompute();
  if (check_finite && !n->val().all_finite())
    throw NumericError("non-finite output in node " + n->label);
}

void Graph::forward() {
  for (auto& n : nodes_) {
    if (n->leaf) continue;
    n->recompute();
    if (check_finite && !n->val().all_finite())
      throw NumericError("non-finite output in node " + n->label);
  }
}

bool Graph::owns(const Node* n) const {
  return std::any_of(nodes_.begin(), nodes_.end(),
                     [n](const std::unique_ptr<Node>& p) { return p.get() == n; });
}

void Graph::backward(Var loss) {
  if (!loss.defined() || !owns(loss.node()))
    throw ConfigError("backward: loss is not a node of this graph");
  if (!loss.value().defined())
    throw ConfigError("backward: forward has not produced a value for the loss node");
  if (loss.value().numel() != 1)
    throw ShapeError("backward: loss must be scalar, got " + shape_str(loss.value().shape()));

  // Interior gradients are per-sweep temporaries; external (parameter and
  // flagged-input) gradients persist and accumulate across sweeps.
  for (auto& n : nodes_) {
    if (!n->ext_grad_ && !(n->leaf && n->requires_grad)) n->grad_ = Tensor();
  }
  loss.node()->ensure_grad();
  loss.node()->grad()[0] += 1.0f;

  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node* n = it->get();
    if (n->leaf || !n->requires_grad) continue;
    if (!n->grad().same_shape(n->val())) continue;  // no gradient reached this node
    n->push_grad();
  }
}

}  // namespace cscae
