#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "tweetbag/nn/tensor.hpp"

namespace tweetbag::nn {

// One value in a computation graph. `backward` reads this node's grad and
// accumulates into the grads of `inputs`.
struct Node {
    Tensor value;
    Tensor grad;  // empty until first touched
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backward;

    Tensor& grad_buffer() {
        if (grad.empty() && !value.empty()) grad = Tensor(value.shape());
        return grad;
    }
};

// Shared handle to a graph node.
class Var {
public:
    Var() = default;
    explicit Var(Tensor value, bool requires_grad = false);
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    bool defined() const { return static_cast<bool>(node_); }
    const Tensor& value() const { return node_->value; }
    const Shape& shape() const { return node_->value.shape(); }
    const Tensor& grad() const { return node_->grad; }
    bool requires_grad() const { return node_->requires_grad; }
    Node* node() const { return node_.get(); }
    const std::shared_ptr<Node>& shared() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

/// Trainable leaf. The same node is reused by every graph built from it, so
/// gradients accumulate across backward passes until zero_grad().
class Parameter {
public:
    Parameter() = default;
    explicit Parameter(Tensor value);

    bool defined() const { return var_.defined(); }
    const Var& var() const { return var_; }
    operator Var() const { return var_; }  // NOLINT(google-explicit-constructor)

    Tensor& value() { return var_.node()->value; }
    const Tensor& value() const { return var_.value(); }
    Tensor& grad() { return var_.node()->grad_buffer(); }
    const Tensor& grad() const { return var_.node()->grad; }
    const Shape& shape() const { return var_.shape(); }

    void zero_grad();

    // A frozen parameter is treated as a constant by new graphs.
    void set_trainable(bool on) { var_.node()->requires_grad = on; }
    bool trainable() const { return var_.requires_grad(); }

    // Independent copy of value (and zeroed grad).
    Parameter clone() const { return Parameter(value()); }

private:
    Var var_;
};

// While alive, new ops on this thread record no backward edges.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

// Builds a non-leaf node. When no input requires a gradient the backward
// closure and the input edges are dropped.
Var make_op(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward);

// Reverse-mode sweep from a single-element root, seeded with d(root) = 1.
void backward(const Var& root);

}  // namespace tweetbag::nn
