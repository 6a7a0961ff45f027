#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "supgcl/tensor.hpp"

namespace supgcl::ad {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape& tape() const { return *tape_; }
    std::size_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

    const Tensor& value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    bool requires_grad() const;

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Records a forward computation and replays it in reverse to accumulate gradients.
///
/// Nodes are appended in evaluation order, so node ids already form a
/// topological order; backward() walks them from the loss down to id 0 and
/// runs each node's rule once.
class Tape {
public:
    /// Backward rule: reads the node's output gradient and adds into parent
    /// gradients obtained through grad_sink().
    using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Leaf whose gradient is tracked.
    Var variable(Tensor value);
    /// Leaf treated as a constant.
    Var constant(Tensor value);

    /// Records a derived node. `parents` determine whether it requires grad.
    Var record(Tensor value, std::span<const Var> parents, BackwardFn backward);
    Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward);

    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

    /// Gradient buffer of node `id` during backward, or nullptr when the node
    /// does not require grad.
    Tensor* grad_sink(std::size_t id);

    /// Reverse pass from a 1 x 1 loss. Throws ContractError for non-scalar
    /// losses and NumericError for non-finite ones. May be called once.
    void backward(Var loss);

    /// Gradient of `v` after backward(); zeros when nothing reached it.
    const Tensor& grad(Var v);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        bool grad_ready = false;
        BackwardFn backward;
    };

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

} // namespace supgcl::ad
