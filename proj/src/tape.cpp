#include "supgcl/tape.hpp"

#include <string>

#include "supgcl/error.hpp"

namespace supgcl::ad {

const Tensor& Var::value() const { return tape_->value(id_); }

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::variable(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, true, false, {}});
    return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, false, false, {}});
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::span<const Var> parents, BackwardFn backward) {
    bool needs = false;
    for (const Var& p : parents) {
        if (&p.tape() != this) {
            throw ContractError("operands recorded on different tapes");
        }
        needs = needs || nodes_[p.id()].requires_grad;
    }
    nodes_.push_back(Node{std::move(value), {}, needs, false, needs ? std::move(backward) : BackwardFn{}});
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward) {
    return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                  std::move(backward));
}

Tensor* Tape::grad_sink(std::size_t id) {
    Node& n = nodes_[id];
    if (!n.requires_grad) {
        return nullptr;
    }
    if (!n.grad_ready) {
        n.grad = Tensor(n.value.rows(), n.value.cols());
        n.grad_ready = true;
    }
    return &n.grad;
}

void Tape::backward(Var loss) {
    if (&loss.tape() != this) {
        throw ContractError("loss recorded on a different tape");
    }
    if (backward_done_) {
        throw ContractError("backward() called twice on one tape");
    }
    const Tensor& lv = nodes_[loss.id()].value;
    if (lv.rows() != 1 || lv.cols() != 1) {
        throw ContractError("backward() needs a scalar loss, got " + std::to_string(lv.rows()) +
                            "x" + std::to_string(lv.cols()));
    }
    if (!lv.all_finite()) {
        throw NumericError("non-finite loss value");
    }
    backward_done_ = true;
    if (Tensor* g = grad_sink(loss.id())) {
        (*g)[0] = 1.0;
    }
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.requires_grad || !n.grad_ready || !n.backward) {
            continue;
        }
        // The rule may create grad buffers on parents but never touches this node's.
        n.backward(*this, n.grad);
    }
}

const Tensor& Tape::grad(Var v) {
    Node& n = nodes_[v.id()];
    if (!n.grad_ready) {
        n.grad = Tensor(n.value.rows(), n.value.cols());
        n.grad_ready = true;
    }
    return n.grad;
}

} // namespace supgcl::ad
