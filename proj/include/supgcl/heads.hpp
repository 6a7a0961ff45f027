#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "supgcl/labels.hpp"
#include "supgcl/ops.hpp"
#include "supgcl/parameters.hpp"

namespace supgcl {

struct HeadConfig {
    std::size_t input_dim = 64;
    /// Width of the hidden layer; 0 gives a single affine map.
    std::size_t hidden = 64;
    std::size_t outputs = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Prediction head: tanh(x W1 + b1) W2 + b2, or x W + b when hidden is 0.
/// For survival the single output is the log relative risk.
class Head {
public:
    explicit Head(HeadConfig config);

    const HeadConfig& config() const { return config_; }
    ad::ParameterSet init_parameters() const;
    ad::Var forward(ad::Var x, const ad::BoundParameters& params) const;

private:
    HeadConfig config_;
};

/// Sum over label columns, mean over rows, of the logistic loss
/// softplus(x) - y x. `targets` holds 0/1 values shaped like `logits`.
ad::Var binary_cross_entropy(ad::Var logits, const ad::Tensor& targets);

/// Mean over rows of -log softmax(logits)[class].
ad::Var multiclass_cross_entropy(ad::Var logits, std::span<const std::size_t> classes);

/// Negative log partial likelihood of a proportional-hazards model, summed
/// over events, with Breslow handling of tied event times. `risks` is n x 1.
/// Throws ContractError when no record has an event.
ad::Var cox_npll(ad::Var risks, std::span<const SurvivalRecord> records);

/// Value-level form on a private tape.
double cox_npll(std::span<const double> risks, std::span<const SurvivalRecord> records);

} // namespace supgcl
