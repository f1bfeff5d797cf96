#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "redraw/nn/tensor.hpp"

namespace redraw::nn {

class Var;

/// Builds the input gradients of one node from the gradient of its output. Gradients are
/// themselves Vars, so when graph recording is on they can be differentiated again.
/// `need[i]` is false for inputs whose gradient nobody asked for; return an empty Var there.
using BackwardFn = std::function<std::vector<Var>(const Var& grad, const std::vector<bool>& need)>;

struct Node {
    Tensor value;
    bool requires_grad = false;
    std::vector<Var> inputs;
    BackwardFn backward;
};

/// Shared handle to a node of the computation graph.
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    static Var leaf(Tensor value, bool requires_grad) {
        auto n = std::make_shared<Node>();
        n->value = std::move(value);
        n->requires_grad = requires_grad;
        return Var(std::move(n));
    }
    static Var constant(Tensor value) { return leaf(std::move(value), false); }

    bool defined() const { return static_cast<bool>(node_); }
    const Tensor& value() const { return node_->value; }
    /// Direct access for optimisers and checkpoint loading; only meaningful on leaves.
    Tensor& mutable_value() const { return node_->value; }
    const Shape& shape() const { return node_->value.shape(); }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    void set_requires_grad(bool on) const { node_->requires_grad = on; }
    Node* node() const { return node_.get(); }

private:
    std::shared_ptr<Node> node_;
};

namespace detail {
inline bool& grad_mode_flag() {
    thread_local bool enabled = true;
    return enabled;
}
}  // namespace detail

inline bool grad_enabled() { return detail::grad_mode_flag(); }

/// Scoped switch for graph recording (off by default construction).
class GradModeGuard {
public:
    explicit GradModeGuard(bool enabled = false) : previous_(detail::grad_mode_flag()) { detail::grad_mode_flag() = enabled; }
    ~GradModeGuard() { detail::grad_mode_flag() = previous_; }
    GradModeGuard(const GradModeGuard&) = delete;
    GradModeGuard& operator=(const GradModeGuard&) = delete;

private:
    bool previous_;
};

using NoGradGuard = GradModeGuard;

/// Wraps a freshly computed value as an op result, recording inputs only when some input
/// needs a gradient and recording is on.
inline Var make_op(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    if (grad_enabled()) {
        bool any = false;
        for (const auto& in : inputs) any = any || in.requires_grad();
        if (any) {
            n->requires_grad = true;
            n->inputs = std::move(inputs);
            n->backward = std::move(backward);
        }
    }
    return Var(std::move(n));
}

inline Var add(const Var& a, const Var& b);

/// Reverse-mode gradients of a scalar `output` with respect to `wrt`. With `create_graph`
/// the returned gradients are themselves differentiable.
inline std::vector<Var> grad(const Var& output, const std::vector<Var>& wrt, bool create_graph = false) {
    if (output.value().size() != 1) throw ShapeError("grad: output must be a scalar");

    // Post-order traversal: inputs appear before the nodes consuming them.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    if (output.requires_grad()) {
        stack.emplace_back(output.node(), 0);
        seen.insert(output.node());
    }
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].node();
            if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    std::unordered_set<Node*> targets;
    for (const auto& v : wrt) targets.insert(v.node());
    std::unordered_set<Node*> useful;
    for (Node* node : order) {
        bool u = targets.count(node) > 0;
        for (const auto& in : node->inputs) u = u || useful.count(in.node()) > 0;
        if (u) useful.insert(node);
    }

    GradModeGuard mode(create_graph);
    std::unordered_map<Node*, Var> grads;
    if (output.requires_grad()) grads[output.node()] = Var::constant(Tensor(output.shape(), 1.0));

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        auto found = grads.find(node);
        if (found == grads.end() || !node->backward || !useful.count(node)) continue;
        std::vector<bool> need(node->inputs.size());
        for (std::size_t i = 0; i < need.size(); ++i) need[i] = useful.count(node->inputs[i].node()) > 0;
        const Var g = found->second;
        if (!targets.count(node)) grads.erase(found);
        std::vector<Var> in_grads = node->backward(g, need);
        for (std::size_t i = 0; i < in_grads.size(); ++i) {
            if (!need[i] || !in_grads[i].defined()) continue;
            Node* child = node->inputs[i].node();
            auto slot = grads.find(child);
            if (slot == grads.end())
                grads.emplace(child, in_grads[i]);
            else
                slot->second = add(slot->second, in_grads[i]);
        }
    }

    std::vector<Var> out;
    out.reserve(wrt.size());
    for (const auto& v : wrt) {
        auto f = grads.find(v.node());
        out.push_back(f != grads.end() ? f->second : Var::constant(Tensor(v.shape(), 0.0)));
    }
    return out;
}

}  // namespace redraw::nn
