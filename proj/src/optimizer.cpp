#include "supgcl/optimizer.hpp"

#include <cmath>

#include "supgcl/error.hpp"

namespace supgcl::ad {

void AdamW::step(ParameterSet& params, const std::vector<Tensor>& grads) {
    if (grads.size() != params.size()) {
        throw ContractError("AdamW: gradient count does not match parameter count");
    }
    if (m_.empty()) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_.emplace_back(params[i].rows(), params[i].cols());
            v_.emplace_back(params[i].rows(), params[i].cols());
        }
    }
    if (m_.size() != params.size()) throw ContractError("AdamW: parameter set changed size");
    ++step_;
    const auto& c = config_;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(step_));
    const double decay = 1.0 - c.learning_rate * c.weight_decay;
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = params[i];
        const Tensor& g = grads[i];
        if (!p.same_shape(g) || !p.same_shape(m_[i])) {
            throw ContractError("AdamW: shape mismatch for parameter '" + params.name(i) + "'");
        }
        for (std::size_t k = 0; k < p.size(); ++k) {
            m_[i][k] = c.beta1 * m_[i][k] + (1.0 - c.beta1) * g[k];
            v_[i][k] = c.beta2 * v_[i][k] + (1.0 - c.beta2) * g[k] * g[k];
            const double mhat = m_[i][k] / bc1;
            const double vhat = v_[i][k] / bc2;
            p[k] = p[k] * decay - c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
        }
    }
}

} // namespace supgcl::ad
