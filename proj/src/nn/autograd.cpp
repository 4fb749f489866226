#include "tweetbag/nn/autograd.hpp"

#include <unordered_set>

#include "tweetbag/error.hpp"

namespace tweetbag::nn {

namespace {
thread_local bool g_grad_enabled = true;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
}

Parameter::Parameter(Tensor value) : var_(std::move(value), true) { var_.node()->grad_buffer(); }

void Parameter::zero_grad() { grad().fill(0.0); }

Var make_op(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward_fn) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    if (g_grad_enabled) {
        for (const auto& in : inputs) {
            if (in.defined() && in.requires_grad()) node->requires_grad = true;
        }
    }
    if (node->requires_grad) {
        node->inputs.reserve(inputs.size());
        for (auto& in : inputs) node->inputs.push_back(in.shared());
        node->backward = std::move(backward_fn);
    }
    return Var(std::move(node));
}

void backward(const Var& root) {
    if (!root.defined() || root.value().size() != 1)
        throw ShapeError("backward needs a single-element root");
    if (!root.requires_grad()) return;

    // Iterative post-order DFS; recurrent graphs are too deep for recursion.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{root.node(), 0}};
    visited.insert(root.node());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].get();
            if (child && child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root.node()->grad_buffer()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (node->backward && !node->grad.empty()) node->backward(*node);
    }
}

}  // namespace tweetbag::nn
