#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "aufd/errors.hpp"

namespace aufd {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

template <typename S>
using MatRM = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using ArrX = Eigen::Array<S, Eigen::Dynamic, 1>;

inline Index shape_size(const Shape& shape) {
    Index n = 1;
    for (Index d : shape) n *= d;
    return n;
}

inline std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << "]";
    return os.str();
}

template <typename S>
struct TensorNode {
    Shape shape;
    ArrX<S> value;
    ArrX<S> grad; // sized lazily by GradTape
    bool requires_grad = false;
    const char* op = "leaf";
    std::vector<std::shared_ptr<TensorNode>> parents;
    // Distributes this node's grad into its parents' grads.
    std::function<void(TensorNode&)> pull;
};

// Forward-graph construction is gated on this flag so evaluation-only code
// paths skip node bookkeeping entirely.
inline bool& grad_mode_flag() {
    thread_local bool enabled = true;
    return enabled;
}
inline bool is_grad_enabled() { return grad_mode_flag(); }

struct NoGradGuard {
    NoGradGuard() : saved_(grad_mode_flag()) { grad_mode_flag() = false; }
    ~NoGradGuard() { grad_mode_flag() = saved_; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool saved_;
};

// Value-semantic handle onto an immutable forward-graph node. Copies share
// the node; ops never mutate existing nodes, so concurrent read-only use is
// safe. Scalar type S is float for training/inference and double for
// finite-difference gradient checks.
template <typename S>
class Tensor {
public:
    using Scalar = S;

    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        return filled(std::move(shape), S(0), requires_grad);
    }

    static Tensor filled(Shape shape, S v, bool requires_grad = false) {
        auto node = std::make_shared<TensorNode<S>>();
        node->shape = std::move(shape);
        node->value = ArrX<S>::Constant(shape_size(node->shape), v);
        node->requires_grad = requires_grad;
        return Tensor(std::move(node));
    }

    static Tensor from_vector(Shape shape, const std::vector<S>& data, bool requires_grad = false) {
        if (static_cast<Index>(data.size()) != shape_size(shape))
            throw ShapeError("tensor: data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
        auto node = std::make_shared<TensorNode<S>>();
        node->shape = std::move(shape);
        node->value = Eigen::Map<const ArrX<S>>(data.data(), static_cast<Index>(data.size()));
        node->requires_grad = requires_grad;
        return Tensor(std::move(node));
    }

    static Tensor from_array(Shape shape, ArrX<S> data, bool requires_grad = false) {
        if (data.size() != shape_size(shape))
            throw ShapeError("tensor: array length does not match shape " + shape_str(shape));
        auto node = std::make_shared<TensorNode<S>>();
        node->shape = std::move(shape);
        node->value = std::move(data);
        node->requires_grad = requires_grad;
        return Tensor(std::move(node));
    }

    static Tensor from_matrix(const MatRM<S>& m, bool requires_grad = false) {
        ArrX<S> data = Eigen::Map<const ArrX<S>>(m.data(), m.size());
        return from_array({m.rows(), m.cols()}, std::move(data), requires_grad);
    }

    static Tensor scalar_value(S v) { return filled({1, 1}, v); }

    // Factory used by every op. Validates finiteness of the fresh value:
    // NaN/Inf anywhere in a forward result is a hard error.
    static Tensor make(const char* op, Shape shape, ArrX<S> value,
                       std::vector<Tensor> parents,
                       std::function<void(TensorNode<S>&)> pull) {
        if (value.size() != shape_size(shape))
            throw ShapeError(std::string(op) + ": result size does not match shape " + shape_str(shape));
        if (!value.allFinite())
            throw NumericsError(std::string(op) + ": non-finite value in forward result");
        auto node = std::make_shared<TensorNode<S>>();
        node->shape = std::move(shape);
        node->value = std::move(value);
        node->op = op;
        bool needs = false;
        if (is_grad_enabled()) {
            for (const Tensor& p : parents) needs = needs || p.requires_grad();
        }
        if (needs) {
            node->requires_grad = true;
            node->parents.reserve(parents.size());
            for (Tensor& p : parents) node->parents.push_back(std::move(p.node_));
            node->pull = std::move(pull);
        }
        return Tensor(std::move(node));
    }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    Index dim(std::size_t i) const { return node_->shape.at(i); }
    Index size() const { return node_->value.size(); }

    Index rows() const { return require_rank2("rows").shape[0]; }
    Index cols() const { return require_rank2("cols").shape[1]; }

    const ArrX<S>& value() const { return node_->value; }
    // Leaf mutation hook for optimizers and finite-difference probes; must
    // not be called on nodes captured inside a live graph being replayed.
    ArrX<S>& value_mut() { return node_->value; }

    Eigen::Map<const MatRM<S>> mat() const {
        const TensorNode<S>& n = require_rank2("mat");
        return Eigen::Map<const MatRM<S>>(n.value.data(), n.shape[0], n.shape[1]);
    }

    S scalar() const {
        if (size() != 1) throw ContractError("scalar: tensor has " + std::to_string(size()) + " elements");
        return node_->value[0];
    }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool v) { node_->requires_grad = v; }

    bool has_grad() const { return node_->grad.size() == node_->value.size(); }
    const ArrX<S>& grad() const {
        if (!has_grad()) throw ContractError("grad: no gradient recorded for this tensor");
        return node_->grad;
    }
    void clear_grad() { node_->grad.resize(0); }

    TensorNode<S>* node() const { return node_.get(); }
    const std::shared_ptr<TensorNode<S>>& node_ptr() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<TensorNode<S>> node) : node_(std::move(node)) {}

    const TensorNode<S>& require_rank2(const char* what) const {
        if (node_->shape.size() != 2)
            throw ShapeError(std::string(what) + ": expected rank-2 tensor, got " + shape_str(node_->shape));
        return *node_;
    }

    std::shared_ptr<TensorNode<S>> node_;
};

// Ordered record of the operations reachable from one scalar result.
// Replaying it back to front runs each op's pull exactly once, which
// populates the gradient of every requires_grad leaf exactly once.
template <typename S>
class GradTape {
public:
    static GradTape record(const Tensor<S>& result) {
        GradTape tape;
        tape.root_ = result.node_ptr();
        if (!tape.root_->requires_grad) return tape;
        // Iterative post-order: parents land before children.
        std::unordered_set<const TensorNode<S>*> seen;
        std::vector<std::pair<TensorNode<S>*, std::size_t>> stack;
        stack.emplace_back(tape.root_.get(), 0);
        seen.insert(tape.root_.get());
        while (!stack.empty()) {
            auto& [node, next] = stack.back();
            if (next < node->parents.size()) {
                TensorNode<S>* parent = node->parents[next++].get();
                if (parent->requires_grad && seen.insert(parent).second)
                    stack.emplace_back(parent, 0);
            } else {
                tape.order_.push_back(node);
                stack.pop_back();
            }
        }
        return tape;
    }

    std::size_t num_ops() const { return order_.size(); }

    void backward() {
        if (!root_) throw ContractError("backward: tape has no root");
        if (root_->value.size() != 1)
            throw ContractError("backward: root must be scalar, got " + shape_str(root_->shape));
        if (order_.empty()) return; // root does not require grad; nothing to do
        for (TensorNode<S>* node : order_) {
            node->grad = ArrX<S>::Zero(node->value.size());
        }
        root_->grad[0] = S(1);
        for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
            TensorNode<S>* node = *it;
            if (node->pull) node->pull(*node);
        }
    }

private:
    std::shared_ptr<TensorNode<S>> root_;
    std::vector<TensorNode<S>*> order_;
};

template <typename S>
void backward(const Tensor<S>& loss) {
    GradTape<S>::record(loss).backward();
}

} // namespace aufd
