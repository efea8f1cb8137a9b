#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cscae/tensor.hpp"

namespace cscae {

class Graph;

/// One recorded operation (or leaf) in the reverse-mode tape.
class Node {
 public:
  virtual ~Node() = default;

  const Tensor& val() const { return ext_value_ ? *ext_value_ : value_; }
  Tensor& mutable_val() { return ext_value_ ? *ext_value_ : value_; }
  Tensor& grad() { return ext_grad_ ? *ext_grad_ : grad_; }
  const Tensor& grad() const { return ext_grad_ ? *ext_grad_ : grad_; }

  /// Allocates a zero gradient buffer if absent.
  void ensure_grad();
  /// Accumulates g into the gradient buffer (additive across fan-out).
  void accumulate_grad(const Tensor& g);

  bool requires_grad = false;
  bool leaf = true;
  std::string label = "leaf";
  std::vector<Node*> inputs;

  /// Forward rule: recompute value_ from inputs. Leaves keep their value.
  virtual void recompute() {}
  /// Backward rule: read grad(), accumulate into inputs' gradients.
  virtual void push_grad() {}

 protected:
  friend class Graph;
  Tensor value_;
  Tensor grad_;
  Tensor* ext_value_ = nullptr;  // parameter leaves alias external storage
  Tensor* ext_grad_ = nullptr;
};

/// Lightweight handle to a node owned by a Graph.
class Var {
 public:
  Var() = default;
  explicit Var(Node* n) : n_(n) {}

  bool defined() const { return n_ != nullptr; }
  Node* node() const { return n_; }
  const Tensor& value() const { return n_->val(); }
  Tensor& grad() const { return n_->grad(); }
  const Shape& shape() const { return n_->val().shape(); }

 private:
  Node* n_ = nullptr;
};

/// Reverse-mode tape. Operations are recorded (and computed) in order;
/// backward() walks the exact reverse, accumulating gradients additively.
/// Parameter gradients persist in their external buffers across backward
/// calls; the caller zeroes them between optimizer steps.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  /// Leaf holding a value; set requires_grad to collect d(loss)/d(value).
  Var input(Tensor value, std::string label = "input", bool requires_grad = false);

  /// Leaf aliasing external parameter storage; gradients accumulate into
  /// `grad` (resized to match `value` on first use).
  Var parameter(Tensor& value, Tensor& grad, std::string label);

  /// Non-differentiable leaf.
  Var constant(Tensor value, std::string label = "const");

  /// Appends a node, runs its forward rule, and checks the output is finite.
  template <class N, class... Args>
  Var make(Args&&... args) {
    auto node = std::make_unique<N>(std::forward<Args>(args)...);
    Node* raw = node.get();
    nodes_.push_back(std::move(node));
    run_forward(raw);
    return Var(raw);
  }

  /// Recomputes every non-leaf node in recording order (replays the tape
  /// against the current leaf values).
  void forward();

  /// Seeds d(loss)=1 and sweeps the tape in reverse. `loss` must be a scalar
  /// node of this graph.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  bool check_finite = true;

 private:
  void run_forward(Node* n);
  bool owns(const Node* n) const;

  std::vector<std::unique_ptr<Node>> nodes_;
};

}  // namespace cscae
