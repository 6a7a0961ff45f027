#include "supgcl/contrastive.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "supgcl/error.hpp"

namespace supgcl {

using ad::Tensor;
using ad::Var;

void LossConfig::validate() const {
    if (!(tau_node > 0.0)) throw ContractError("tau_node must be positive");
    if (!(tau_aug > 0.0)) throw ContractError("tau_aug must be positive");
}

namespace {

void require_pair(const Var& za, const Var& zb) {
    if (za.rows() != zb.rows() || za.cols() != zb.cols()) {
        throw ContractError("node_loss: embedding shapes differ");
    }
    if (za.rows() == 0) throw ContractError("node_loss: empty embedding matrix");
}

// Node loss on already row-normalized embeddings.
Var node_loss_normalized(Var na, Var nb, double tau_node) {
    Var logq = ad::log_softmax_rows(ad::matmul(na, ad::transpose(nb)), tau_node);
    return ad::scale(ad::mean(ad::diagonal(logq)), -1.0);
}

void require_views(std::span<const Var> teacher, std::span<const Var> patient) {
    if (teacher.empty() || teacher.size() != patient.size()) {
        throw ContractError("need one teacher and one patient embedding per augmentation, got " +
                            std::to_string(teacher.size()) + " and " + std::to_string(patient.size()));
    }
    const std::size_t r = teacher.front().rows(), c = teacher.front().cols();
    for (std::span<const Var> views : {teacher, patient}) {
        for (const Var& v : views) {
            if (v.rows() != r || v.cols() != c) {
                throw ContractError("augmentation embeddings must share one shape");
            }
        }
    }
}

// K x (|V| d) matrix whose rows are the flattened embeddings.
Var stack_flat(std::span<const Var> views, bool normalize) {
    std::vector<Var> rows;
    rows.reserve(views.size());
    for (const Var& v : views) rows.push_back(ad::reshape(v, 1, v.rows() * v.cols()));
    Var m = ad::concat_rows(rows);
    return normalize ? ad::rowwise_l2_normalize(m) : m;
}

std::vector<Var> constants(ad::Tape& tape, std::span<const Tensor> values) {
    std::vector<Var> out;
    out.reserve(values.size());
    for (const Tensor& t : values) out.push_back(tape.constant(t));
    return out;
}

} // namespace

Var node_loss(Var za, Var zb, double tau_node) {
    require_pair(za, zb);
    if (!(tau_node > 0.0)) throw ContractError("tau_node must be positive");
    return node_loss_normalized(ad::rowwise_l2_normalize(za), ad::rowwise_l2_normalize(zb), tau_node);
}

Var grace_style_loss(Var za, Var zb, double tau_node) { return node_loss(za, zb, tau_node); }

Var node_loss_uniform(std::span<const Var> patient, double tau_node) {
    if (patient.empty()) throw ContractError("node_loss_uniform: no augmentations");
    if (!(tau_node > 0.0)) throw ContractError("tau_node must be positive");
    std::vector<Var> normed;
    for (const Var& z : patient) {
        require_pair(z, patient.front());
        normed.push_back(ad::rowwise_l2_normalize(z));
    }
    const std::size_t k = patient.size();
    std::vector<Var> terms;
    terms.reserve(k * k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) terms.push_back(node_loss_normalized(normed[a], normed[b], tau_node));
    return ad::scale(ad::sum(ad::concat_rows(terms)), 1.0 / static_cast<double>(k * k));
}

AugDistributions aug_distributions(std::span<const Var> teacher, std::span<const Var> patient,
                                   double tau_aug, bool normalize_frobenius) {
    require_views(teacher, patient);
    if (!(tau_aug > 0.0)) throw ContractError("tau_aug must be positive");
    Var my = stack_flat(teacher, normalize_frobenius);
    Var mz = stack_flat(patient, normalize_frobenius);
    AugDistributions d;
    d.log_p = ad::log_softmax_rows(ad::matmul(my, ad::transpose(my)), tau_aug);
    d.log_q = ad::log_softmax_rows(ad::matmul(mz, ad::transpose(mz)), tau_aug);
    d.p = ad::exp(d.log_p);
    d.q = ad::exp(d.log_q);
    return d;
}

Var aug_loss(const AugDistributions& d) {
    const double k = static_cast<double>(d.p.rows());
    return ad::scale(ad::sum(ad::mul(d.p, ad::sub(d.log_p, d.log_q))), 1.0 / k);
}

Var supgcl_loss_exact(std::span<const Var> teacher, std::span<const Var> patient, const LossConfig& cfg) {
    cfg.validate();
    AugDistributions d = aug_distributions(teacher, patient, cfg.tau_aug, cfg.normalize_frobenius);
    const std::size_t k = patient.size();
    std::vector<Var> normed;
    normed.reserve(k);
    for (const Var& z : patient) normed.push_back(ad::rowwise_l2_normalize(z));
    std::vector<Var> node_terms;
    node_terms.reserve(k * k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b)
            node_terms.push_back(node_loss_normalized(normed[a], normed[b], cfg.tau_node));
    // K x K matrix of node losses, weighted by p(b|a) / K.
    Var node_matrix = ad::reshape(ad::concat_rows(node_terms), k, k);
    Var expected = ad::scale(ad::sum(ad::mul(d.p, node_matrix)), 1.0 / static_cast<double>(k));
    return ad::add(expected, aug_loss(d));
}

SampledLoss supgcl_loss_sampled(std::span<const Var> teacher, std::span<const Var> patient,
                                std::size_t a, std::size_t b, const LossConfig& cfg) {
    cfg.validate();
    require_views(teacher, patient);
    const std::size_t k = patient.size();
    if (a >= k || b >= k) throw ContractError("sampled augmentation index outside K");
    Var my = stack_flat(teacher, cfg.normalize_frobenius);
    Var mz = stack_flat(patient, cfg.normalize_frobenius);
    const std::size_t row[] = {a};
    Var log_p_row = ad::log_softmax_rows(ad::matmul(ad::gather_rows(my, row), ad::transpose(my)), cfg.tau_aug);
    Var log_q_row = ad::log_softmax_rows(ad::matmul(ad::gather_rows(mz, row), ad::transpose(mz)), cfg.tau_aug);
    Var log_p = ad::element(log_p_row, 0, b);
    Var log_q = ad::element(log_q_row, 0, b);
    Var weight = ad::scale(ad::exp(log_p), static_cast<double>(k));

    SampledLoss out;
    out.node_term = ad::mul(weight, node_loss(patient[a], patient[b], cfg.tau_node));
    out.aug_term = ad::mul(weight, ad::sub(log_p, log_q));
    out.loss = ad::add(out.node_term, out.aug_term);
    out.weight = weight.value().item();
    out.log_p = log_p.value().item();
    out.log_q = log_q.value().item();
    return out;
}

double node_loss(const Tensor& za, const Tensor& zb, double tau_node) {
    ad::Tape tape;
    return node_loss(tape.constant(za), tape.constant(zb), tau_node).value().item();
}

AugDistributionValues aug_distributions(std::span<const Tensor> teacher, std::span<const Tensor> patient,
                                        double tau_aug, bool normalize_frobenius) {
    ad::Tape tape;
    auto t = constants(tape, teacher);
    auto p = constants(tape, patient);
    AugDistributions d = aug_distributions(t, p, tau_aug, normalize_frobenius);
    return {d.p.value(), d.q.value(), d.log_p.value(), d.log_q.value()};
}

double aug_loss(const AugDistributionValues& d) {
    double s = 0.0;
    for (std::size_t i = 0; i < d.p.size(); ++i) s += d.p[i] * (d.log_p[i] - d.log_q[i]);
    return s / static_cast<double>(d.p.rows());
}

double supgcl_loss_exact(std::span<const Tensor> teacher, std::span<const Tensor> patient,
                         const LossConfig& cfg) {
    ad::Tape tape;
    auto t = constants(tape, teacher);
    auto p = constants(tape, patient);
    return supgcl_loss_exact(t, p, cfg).value().item();
}

double node_loss_uniform(std::span<const Tensor> patient, double tau_node) {
    ad::Tape tape;
    auto p = constants(tape, patient);
    return node_loss_uniform(p, tau_node).value().item();
}

SampledTerms supgcl_loss_sampled(std::span<const Tensor> teacher, std::span<const Tensor> patient,
                                 std::size_t a, std::size_t b, const LossConfig& cfg) {
    ad::Tape tape;
    auto t = constants(tape, teacher);
    auto p = constants(tape, patient);
    SampledLoss s = supgcl_loss_sampled(t, p, a, b, cfg);
    return {s.loss.value().item(), s.node_term.value().item(), s.aug_term.value().item(), s.weight};
}

} // namespace supgcl
