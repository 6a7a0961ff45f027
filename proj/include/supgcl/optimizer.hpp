#pragma once

#include <cstdint>
#include <vector>

#include "supgcl/parameters.hpp"
#include "supgcl/tensor.hpp"

namespace supgcl::ad {

struct AdamWConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.01;
};

/// Adam with decoupled weight decay (Loshchilov & Hutter). One step:
///   theta <- theta * (1 - lr * wd)
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
class AdamW {
public:
    explicit AdamW(AdamWConfig config) : config_(config) {}

    /// Applies one update. Moment buffers are created on the first call and
    /// must shape-match the parameters afterwards.
    void step(ParameterSet& params, const std::vector<Tensor>& grads);

    const AdamWConfig& config() const { return config_; }
    std::uint64_t step_count() const { return step_; }
    const std::vector<Tensor>& first_moments() const { return m_; }
    const std::vector<Tensor>& second_moments() const { return v_; }

private:
    AdamWConfig config_;
    std::uint64_t step_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

} // namespace supgcl::ad
