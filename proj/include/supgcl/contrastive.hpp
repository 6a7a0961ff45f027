#pragma once

#include <cstddef>
#include <span>

#include "supgcl/ops.hpp"

// Node-level and augmentation-level contrastive objectives.
//
// Notation: K augmentations (knockdown genes) in a fixed order; for each a,
// Z^a is the encoder output on the knocked-down patient graph and Y^a on a
// teacher graph for the same knockdown. All embedding matrices are |V| x d.
namespace supgcl {

struct LossConfig {
    double tau_node = 0.25;
    double tau_aug = 0.25;
    /// Divide the Frobenius similarity by both matrix norms (ablation; off by default).
    bool normalize_frobenius = false;

    void validate() const;
};

/// Mean over nodes i of -log q(i | i), with
/// q(j | i) = softmax_j(cos(z_i^a, z_j^b) / tau_node) taken over the nodes of
/// the other view only. Equals the mean KL from the point mass at i.
ad::Var node_loss(ad::Var za, ad::Var zb, double tau_node);

/// The tau_aug -> infinity baseline: identical to node_loss on a given pair.
ad::Var grace_style_loss(ad::Var za, ad::Var zb, double tau_node);

/// E_{a,b ~ U_K}[node_loss(Z^a, Z^b)] by enumeration.
ad::Var node_loss_uniform(std::span<const ad::Var> patient, double tau_node);

/// Row-stochastic K x K matrices p(b|a) (teachers) and q(b|a) (augmented
/// patients), each a softmax over <M^a, M^b>_F / tau_aug, plus their logs.
struct AugDistributions {
    ad::Var p;
    ad::Var q;
    ad::Var log_p;
    ad::Var log_q;
};

AugDistributions aug_distributions(std::span<const ad::Var> teacher, std::span<const ad::Var> patient,
                                   double tau_aug, bool normalize_frobenius = false);

/// (1/K) sum_a KL(p(.|a) || q(.|a)).
ad::Var aug_loss(const AugDistributions& d);

/// E_{a ~ U_K, b ~ p(b|a)}[node_loss(Z^a, Z^b)] + aug_loss, enumerating all
/// (a, b). Gradients flow through p as well as q.
ad::Var supgcl_loss_exact(std::span<const ad::Var> teacher, std::span<const ad::Var> patient,
                          const LossConfig& cfg);

/// One-pair importance-sampled estimate for (a, b) drawn uniformly:
///   w = K p(b|a),  loss = w * node_loss(Z^a, Z^b) + w * (log p(b|a) - log q(b|a)).
/// Only row a of each augmentation softmax is formed; the normalizer is exact.
struct SampledLoss {
    ad::Var loss;
    ad::Var node_term;
    ad::Var aug_term;
    double weight = 0.0;
    double log_p = 0.0;
    double log_q = 0.0;
};

SampledLoss supgcl_loss_sampled(std::span<const ad::Var> teacher, std::span<const ad::Var> patient,
                                std::size_t a, std::size_t b, const LossConfig& cfg);

// Value-level conveniences that evaluate on a private tape.
double node_loss(const ad::Tensor& za, const ad::Tensor& zb, double tau_node);

struct AugDistributionValues {
    ad::Tensor p;
    ad::Tensor q;
    ad::Tensor log_p;
    ad::Tensor log_q;
};

AugDistributionValues aug_distributions(std::span<const ad::Tensor> teacher,
                                        std::span<const ad::Tensor> patient, double tau_aug,
                                        bool normalize_frobenius = false);
double aug_loss(const AugDistributionValues& d);
double supgcl_loss_exact(std::span<const ad::Tensor> teacher, std::span<const ad::Tensor> patient,
                         const LossConfig& cfg);
double node_loss_uniform(std::span<const ad::Tensor> patient, double tau_node);

struct SampledTerms {
    double loss = 0.0;
    double node_term = 0.0;
    double aug_term = 0.0;
    double weight = 0.0;
};

SampledTerms supgcl_loss_sampled(std::span<const ad::Tensor> teacher,
                                 std::span<const ad::Tensor> patient, std::size_t a, std::size_t b,
                                 const LossConfig& cfg);

} // namespace supgcl
