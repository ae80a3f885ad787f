// Copyright (C) 2026 analora authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode differentiation over Tensor<S>. A Tape owns an ordered record
// of primitive applications; replaying it backward yields one gradient per
// registered leaf. Tapes are single-threaded; tensors and finished gradient
// maps may be shared freely.
//
// Constants can be bound by reference (constant_ref) so that repeated
// inference over a fixed parameter set does not copy parameter storage.

#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "analora/tensor.hpp"

namespace analora {

template <typename S>
class Tape;

template <typename S>
struct Var {
    Tape<S>* tape = nullptr;
    uint32_t index = 0;

    bool valid() const { return tape != nullptr; }
};

template <typename S>
class Tape {
public:
    enum class Op : uint8_t {
        Leaf,
        Constant,
        MatMul,
        Softmax,
        Add,
        Sub,
        Mul,
        Scale,
        Tanh,
        Clamp,
        Mean,
        Sum,
        Mse,
        Concat,
        Slice,
        Transpose,
    };

    Var<S> leaf(Tensor<S> value) {
        uint32_t idx = push(Op::Leaf, std::move(value), nullptr, true);
        leaves_.push_back(idx);
        return {this, idx};
    }

    Var<S> constant(Tensor<S> value) { return {this, push(Op::Constant, std::move(value), nullptr, false)}; }

    // The referenced tensor must outlive the tape.
    Var<S> constant_ref(const Tensor<S>* value) {
        return {this, push(Op::Constant, Tensor<S>{}, value, false)};
    }

    const Tensor<S>& value(Var<S> v) const { return value_at(v.index); }

    size_t size() const { return nodes_.size(); }
    size_t leaf_count() const { return leaves_.size(); }

    Var<S> matmul(Var<S> a, Var<S> b) {
        Tensor<S> out = analora::matmul(value(a), value(b));
        uint32_t idx = push(Op::MatMul, std::move(out), nullptr, needs(a) || needs(b));
        node(idx).a = a.index;
        node(idx).b = b.index;
        return {this, idx};
    }

    Var<S> softmax(Var<S> a) {
        Tensor<S> out = analora::softmax(value(a));
        uint32_t idx = push(Op::Softmax, std::move(out), nullptr, needs(a));
        node(idx).a = a.index;
        return {this, idx};
    }

    Var<S> add(Var<S> a, Var<S> b) { return binary(Op::Add, a, b, analora::add<S>); }
    Var<S> sub(Var<S> a, Var<S> b) { return binary(Op::Sub, a, b, analora::sub<S>); }
    Var<S> mul(Var<S> a, Var<S> b) { return binary(Op::Mul, a, b, analora::mul<S>); }

    Var<S> scale(Var<S> a, double factor) {
        Tensor<S> out = analora::scale(value(a), factor);
        uint32_t idx = push(Op::Scale, std::move(out), nullptr, needs(a));
        node(idx).a = a.index;
        node(idx).c0 = factor;
        return {this, idx};
    }

    Var<S> tanh(Var<S> a) {
        Tensor<S> out = analora::tanh(value(a));
        uint32_t idx = push(Op::Tanh, std::move(out), nullptr, needs(a));
        node(idx).a = a.index;
        return {this, idx};
    }

    // Subgradient 0 outside [lo, hi], 1 inside (boundaries included).
    Var<S> clamp(Var<S> a, double lo, double hi) {
        Tensor<S> out = analora::clamp(value(a), lo, hi);
        uint32_t idx = push(Op::Clamp, std::move(out), nullptr, needs(a));
        node(idx).a = a.index;
        node(idx).c0 = lo;
        node(idx).c1 = hi;
        return {this, idx};
    }

    Var<S> mean(Var<S> a) {
        Tensor<S> out = analora::mean(value(a));
        uint32_t idx = push(Op::Mean, std::move(out), nullptr, needs(a));
        node(idx).a = a.index;
        return {this, idx};
    }

    Var<S> sum(Var<S> a) {
        Tensor<S> out = analora::sum(value(a));
        uint32_t idx = push(Op::Sum, std::move(out), nullptr, needs(a));
        node(idx).a = a.index;
        return {this, idx};
    }

    Var<S> mse(Var<S> a, Var<S> b) {
        Tensor<S> out = analora::mse(value(a), value(b));
        uint32_t idx = push(Op::Mse, std::move(out), nullptr, needs(a) || needs(b));
        node(idx).a = a.index;
        node(idx).b = b.index;
        return {this, idx};
    }

    Var<S> concat(std::span<const Var<S>> parts) {
        require(!parts.empty(), ErrorKind::InvalidArgument, "concat: no operands");
        std::vector<const Tensor<S>*> tensors;
        tensors.reserve(parts.size());
        bool any_grad = false;
        for (Var<S> p : parts) {
            tensors.push_back(&value(p));
            any_grad = any_grad || needs(p);
        }
        Tensor<S> out = analora::concat<S>(tensors);
        uint32_t idx = push(Op::Concat, std::move(out), nullptr, any_grad);
        node(idx).srcs.reserve(parts.size());
        for (Var<S> p : parts) node(idx).srcs.push_back(p.index);
        return {this, idx};
    }

    Var<S> concat(Var<S> a, Var<S> b) {
        const Var<S> parts[] = {a, b};
        return concat(std::span<const Var<S>>(parts, 2));
    }

    Var<S> slice(Var<S> a, size_t offset, size_t count) {
        Tensor<S> out = analora::slice(value(a), offset, count);
        uint32_t idx = push(Op::Slice, std::move(out), nullptr, needs(a));
        node(idx).a = a.index;
        node(idx).s0 = offset;
        node(idx).s1 = count;
        return {this, idx};
    }

    Var<S> transpose(Var<S> a) {
        Tensor<S> out = analora::transpose(value(a));
        uint32_t idx = push(Op::Transpose, std::move(out), nullptr, needs(a));
        node(idx).a = a.index;
        return {this, idx};
    }

    // Gradients of `loss` with respect to every registered leaf, keyed by the
    // leaf's node index. Leaves off the loss path receive zero tensors.
    std::unordered_map<uint32_t, Tensor<S>> backward(Var<S> loss) {
        require(loss.tape == this, ErrorKind::InvalidArgument, "backward: var from another tape");
        require(value(loss).is_scalar(), ErrorKind::InvalidArgument,
                "backward: loss must be a scalar tensor");
        for (auto& n : nodes_) n.grad.data.clear();
        ensure_grad(loss.index).data[0] = S(1);

        for (uint32_t idx = static_cast<uint32_t>(nodes_.size()); idx-- > 0;) {
            Node& n = nodes_[idx];
            if (!n.requires_grad || n.grad.data.empty()) continue;
            propagate(idx);
        }

        std::unordered_map<uint32_t, Tensor<S>> grads;
        grads.reserve(leaves_.size());
        for (uint32_t leaf_idx : leaves_) {
            Node& n = nodes_[leaf_idx];
            if (n.grad.data.empty())
                grads.emplace(leaf_idx, Tensor<S>::zeros(value_at(leaf_idx).shape));
            else
                grads.emplace(leaf_idx, n.grad);
        }
        return grads;
    }

    void clear() {
        nodes_.clear();
        leaves_.clear();
    }

private:
    struct Node {
        Tensor<S> value;             // owned storage (empty when ref is set)
        const Tensor<S>* ref = nullptr;
        Tensor<S> grad;              // lazily allocated during backward
        Op op = Op::Leaf;
        bool requires_grad = false;
        uint32_t a = 0, b = 0;
        double c0 = 0.0, c1 = 0.0;   // scale factor / clamp bounds
        size_t s0 = 0, s1 = 0;       // slice offset / count
        std::vector<uint32_t> srcs;  // concat operands
    };

    const Tensor<S>& value_at(uint32_t idx) const {
        const Node& n = nodes_[idx];
        return n.ref ? *n.ref : n.value;
    }

    bool needs(Var<S> v) const {
        require(v.tape == this, ErrorKind::InvalidArgument, "op: var from another tape");
        return nodes_[v.index].requires_grad;
    }

    Node& node(uint32_t idx) { return nodes_[idx]; }

    uint32_t push(Op op, Tensor<S> value, const Tensor<S>* ref, bool requires_grad) {
        Node n;
        n.op = op;
        n.value = std::move(value);
        n.ref = ref;
        n.requires_grad = requires_grad;
        nodes_.push_back(std::move(n));
        return static_cast<uint32_t>(nodes_.size() - 1);
    }

    template <typename F>
    Var<S> binary(Op op, Var<S> a, Var<S> b, F&& forward) {
        Tensor<S> out = forward(value(a), value(b));
        uint32_t idx = push(op, std::move(out), nullptr, needs(a) || needs(b));
        node(idx).a = a.index;
        node(idx).b = b.index;
        return {this, idx};
    }

    Tensor<S>& ensure_grad(uint32_t idx) {
        Node& n = nodes_[idx];
        if (n.grad.data.empty()) n.grad = Tensor<S>::zeros(value_at(idx).shape);
        return n.grad;
    }

    void accumulate(uint32_t idx, const Tensor<S>& delta) {
        if (!nodes_[idx].requires_grad) return;
        Tensor<S>& g = ensure_grad(idx);
        for (size_t i = 0; i < g.numel(); ++i) g.data[i] += delta.data[i];
    }

    // Accumulate into a possibly-scalar operand of a broadcast binary op.
    void accumulate_broadcast(uint32_t idx, const Tensor<S>& delta, S sign) {
        if (!nodes_[idx].requires_grad) return;
        Tensor<S>& g = ensure_grad(idx);
        if (g.numel() == delta.numel()) {
            for (size_t i = 0; i < g.numel(); ++i) g.data[i] += sign * delta.data[i];
        } else {
            S acc = S(0);
            for (S v : delta.data) acc += v;
            g.data[0] += sign * acc;
        }
    }

    void propagate(uint32_t idx) {
        Node& n = nodes_[idx];
        const Tensor<S>& g = n.grad;
        switch (n.op) {
            case Op::Leaf:
            case Op::Constant:
                break;
            case Op::MatMul: {
                const Tensor<S>& a = value_at(n.a);
                const Tensor<S>& b = value_at(n.b);
                if (a.rank() == 2 && b.rank() == 2) {
                    if (nodes_[n.a].requires_grad) accumulate(n.a, matmul(g, transpose(b)));
                    if (nodes_[n.b].requires_grad) accumulate(n.b, matmul(transpose(a), g));
                } else if (a.rank() == 2 && b.rank() == 1) {
                    if (nodes_[n.a].requires_grad) accumulate(n.a, outer(g, b));
                    if (nodes_[n.b].requires_grad) accumulate(n.b, matmul(transpose(a), g));
                } else {  // vector x matrix
                    if (nodes_[n.a].requires_grad) accumulate(n.a, matmul(b, g));
                    if (nodes_[n.b].requires_grad) accumulate(n.b, outer(a, g));
                }
                break;
            }
            case Op::Softmax: {
                const Tensor<S>& y = value_at(idx);
                S dot = S(0);
                for (size_t i = 0; i < y.numel(); ++i) dot += g.data[i] * y.data[i];
                Tensor<S> dx = Tensor<S>::zeros(y.shape);
                for (size_t i = 0; i < y.numel(); ++i)
                    dx.data[i] = y.data[i] * (g.data[i] - dot);
                accumulate(n.a, dx);
                break;
            }
            case Op::Add:
                accumulate_broadcast(n.a, g, S(1));
                accumulate_broadcast(n.b, g, S(1));
                break;
            case Op::Sub:
                accumulate_broadcast(n.a, g, S(1));
                accumulate_broadcast(n.b, g, S(-1));
                break;
            case Op::Mul: {
                const Tensor<S>& a = value_at(n.a);
                const Tensor<S>& b = value_at(n.b);
                if (nodes_[n.a].requires_grad) accumulate_broadcast(n.a, mul(g, b), S(1));
                if (nodes_[n.b].requires_grad) accumulate_broadcast(n.b, mul(g, a), S(1));
                break;
            }
            case Op::Scale:
                accumulate(n.a, analora::scale(g, n.c0));
                break;
            case Op::Tanh: {
                const Tensor<S>& y = value_at(idx);
                Tensor<S> dx = Tensor<S>::zeros(y.shape);
                for (size_t i = 0; i < y.numel(); ++i)
                    dx.data[i] = g.data[i] * (S(1) - y.data[i] * y.data[i]);
                accumulate(n.a, dx);
                break;
            }
            case Op::Clamp: {
                const Tensor<S>& x = value_at(n.a);
                Tensor<S> dx = Tensor<S>::zeros(x.shape);
                for (size_t i = 0; i < x.numel(); ++i) {
                    const double v = static_cast<double>(x.data[i]);
                    dx.data[i] = (v >= n.c0 && v <= n.c1) ? g.data[i] : S(0);
                }
                accumulate(n.a, dx);
                break;
            }
            case Op::Mean: {
                const Tensor<S>& x = value_at(n.a);
                const S w = g.data[0] / static_cast<S>(x.numel());
                accumulate(n.a, Tensor<S>::full(x.shape, w));
                break;
            }
            case Op::Sum: {
                const Tensor<S>& x = value_at(n.a);
                accumulate(n.a, Tensor<S>::full(x.shape, g.data[0]));
                break;
            }
            case Op::Mse: {
                const Tensor<S>& a = value_at(n.a);
                const Tensor<S>& b = value_at(n.b);
                const S w = S(2) * g.data[0] / static_cast<S>(a.numel());
                if (nodes_[n.a].requires_grad || nodes_[n.b].requires_grad) {
                    Tensor<S> d = Tensor<S>::zeros(a.shape);
                    for (size_t i = 0; i < a.numel(); ++i)
                        d.data[i] = w * (a.data[i] - b.data[i]);
                    if (nodes_[n.a].requires_grad) accumulate(n.a, d);
                    if (nodes_[n.b].requires_grad) {
                        for (auto& v : d.data) v = -v;
                        accumulate(n.b, d);
                    }
                }
                break;
            }
            case Op::Concat: {
                size_t offset = 0;
                for (uint32_t src : n.srcs) {
                    const size_t count = value_at(src).numel();
                    if (nodes_[src].requires_grad) {
                        Tensor<S>& sg = ensure_grad(src);
                        for (size_t i = 0; i < count; ++i) sg.data[i] += g.data[offset + i];
                    }
                    offset += count;
                }
                break;
            }
            case Op::Slice: {
                if (nodes_[n.a].requires_grad) {
                    Tensor<S>& sg = ensure_grad(n.a);
                    for (size_t i = 0; i < n.s1; ++i) sg.data[n.s0 + i] += g.data[i];
                }
                break;
            }
            case Op::Transpose:
                accumulate(n.a, transpose(g));
                break;
        }
    }

    std::vector<Node> nodes_;
    std::vector<uint32_t> leaves_;
};

// ---------------------------------------------------------------------------
// Finite-difference gradient oracle.
//
// `f` rebuilds the computation from scratch on the given tape for the given
// leaf values and returns the scalar output var. grad_check compares the
// tape's analytic gradients against central differences, coordinate by
// coordinate, and returns the worst relative error with denominator
// max(|analytic|, |numeric|, 1e-12).
// ---------------------------------------------------------------------------

template <typename S>
using GradCheckFn = std::function<Var<S>(Tape<S>&, const std::vector<Var<S>>&)>;

template <typename S>
double grad_check(const GradCheckFn<S>& f, std::vector<Tensor<S>> leaves, double eps) {
    require(eps >= 1e-7 && eps <= 1e-3, ErrorKind::InvalidArgument,
            "grad_check: eps must lie in [1e-7, 1e-3]");

    auto eval = [&](const std::vector<Tensor<S>>& values) {
        Tape<S> tape;
        std::vector<Var<S>> vars;
        vars.reserve(values.size());
        for (const auto& v : values) vars.push_back(tape.leaf(v));
        Var<S> out = f(tape, vars);
        require(tape.value(out).is_scalar(), ErrorKind::InvalidArgument,
                "grad_check: function must return a scalar");
        return static_cast<double>(tape.value(out).data[0]);
    };

    // Analytic pass.
    Tape<S> tape;
    std::vector<Var<S>> vars;
    vars.reserve(leaves.size());
    for (const auto& v : leaves) vars.push_back(tape.leaf(v));
    Var<S> out = f(tape, vars);
    auto grads = tape.backward(out);

    double worst = 0.0;
    for (size_t li = 0; li < leaves.size(); ++li) {
        const Tensor<S>& analytic = grads.at(vars[li].index);
        for (size_t i = 0; i < leaves[li].numel(); ++i) {
            const S original = leaves[li].data[i];
            leaves[li].data[i] = original + static_cast<S>(eps);
            const double up = eval(leaves);
            leaves[li].data[i] = original - static_cast<S>(eps);
            const double down = eval(leaves);
            leaves[li].data[i] = original;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = static_cast<double>(analytic.data[i]);
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-12});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

}  // namespace analora
