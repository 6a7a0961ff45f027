#include "supgcl/heads.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "supgcl/error.hpp"
#include "supgcl/random.hpp"

namespace supgcl {

using ad::Tensor;
using ad::Var;

void HeadConfig::validate() const {
    if (input_dim == 0) throw ContractError("head input_dim must be positive");
    if (outputs == 0) throw ContractError("head outputs must be positive");
}

Head::Head(HeadConfig config) : config_(config) { config_.validate(); }

ad::ParameterSet Head::init_parameters() const {
    Rng rng(config_.seed);
    auto uniform = [&rng](std::size_t rows, std::size_t cols, double fan_in) {
        const double bound = 1.0 / std::sqrt(fan_in);
        std::uniform_real_distribution<double> dist(-bound, bound);
        Tensor t(rows, cols);
        for (auto& v : t.data()) v = dist(rng);
        return t;
    };
    const auto in = static_cast<double>(config_.input_dim);
    ad::ParameterSet p;
    if (config_.hidden == 0) {
        p.add("w", uniform(config_.input_dim, config_.outputs, in));
        p.add("b", uniform(1, config_.outputs, in));
        return p;
    }
    const auto hid = static_cast<double>(config_.hidden);
    p.add("w1", uniform(config_.input_dim, config_.hidden, in));
    p.add("b1", uniform(1, config_.hidden, in));
    p.add("w2", uniform(config_.hidden, config_.outputs, hid));
    p.add("b2", uniform(1, config_.outputs, hid));
    return p;
}

Var Head::forward(Var x, const ad::BoundParameters& params) const {
    const std::size_t expected = config_.hidden == 0 ? 2 : 4;
    if (params.vars.size() != expected) throw ContractError("head parameter count does not match its configuration");
    if (x.cols() != config_.input_dim) {
        throw ContractError("head expects " + std::to_string(config_.input_dim) + " input columns, got " +
                            std::to_string(x.cols()));
    }
    if (config_.hidden == 0) return ad::add_row(ad::matmul(x, params[0]), params[1]);
    Var h = ad::tanh(ad::add_row(ad::matmul(x, params[0]), params[1]));
    return ad::add_row(ad::matmul(h, params[2]), params[3]);
}

Var binary_cross_entropy(Var logits, const Tensor& targets) {
    if (!logits.value().same_shape(targets)) throw ContractError("binary_cross_entropy: shape mismatch");
    if (logits.rows() == 0) throw ContractError("binary_cross_entropy: no rows");
    for (double y : targets.data()) {
        if (y != 0.0 && y != 1.0) throw ContractError("binary_cross_entropy: targets must be 0 or 1");
    }
    Var y = logits.tape().constant(targets);
    Var per = ad::sub(ad::softplus(logits), ad::mul(y, logits));
    return ad::scale(ad::sum(per), 1.0 / static_cast<double>(logits.rows()));
}

Var multiclass_cross_entropy(Var logits, std::span<const std::size_t> classes) {
    if (logits.rows() != classes.size()) throw ContractError("multiclass_cross_entropy: shape mismatch");
    if (classes.empty()) throw ContractError("multiclass_cross_entropy: no rows");
    Tensor onehot(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (classes[i] >= logits.cols()) throw ContractError("multiclass_cross_entropy: class index out of range");
        onehot(i, classes[i]) = 1.0;
    }
    Var picked = ad::mul(logits.tape().constant(onehot), ad::log_softmax_rows(logits));
    return ad::scale(ad::sum(picked), -1.0 / static_cast<double>(classes.size()));
}

Var cox_npll(Var risks, std::span<const SurvivalRecord> records) {
    const Tensor& r = risks.value();
    if (r.cols() != 1 || r.rows() != records.size()) throw ContractError("cox_npll: risks must be n x 1 with n records");
    if (std::none_of(records.begin(), records.end(), [](const SurvivalRecord& s) { return s.event == 1; })) {
        throw ContractError("cox_npll: no events, partial likelihood undefined");
    }
    if (!r.all_finite()) throw NumericError("cox_npll: non-finite risk score");
    const std::size_t n = records.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return records[a].time > records[b].time; });
    const double shift = *std::max_element(r.data().begin(), r.data().end());

    // Sweep from the latest time; each tie group joins the risk set before its
    // events are scored. Per event-time group: d log S - sum of event risks.
    struct Group {
        double risk_sum;
        double events;
    };
    std::vector<Group> groups;
    std::vector<std::size_t> group_of(n);
    double total = 0.0, s = 0.0;
    for (std::size_t start = 0; start < n;) {
        std::size_t end = start;
        while (end < n && records[order[end]].time == records[order[start]].time) ++end;
        double d = 0.0, event_risk = 0.0;
        for (std::size_t k = start; k < end; ++k) {
            const std::size_t i = order[k];
            s += std::exp(r[i] - shift);
            if (records[i].event == 1) {
                d += 1.0;
                event_risk += r[i];
            }
            group_of[i] = groups.size();
        }
        if (d > 0.0) total += d * (std::log(s) + shift) - event_risk;
        groups.push_back({s, d});
        start = end;
    }

    const std::size_t ir = risks.id();
    std::vector<SurvivalRecord> recs(records.begin(), records.end());
    return risks.tape().record(
        Tensor::scalar(total), {risks},
        [ir, shift, groups = std::move(groups), group_of = std::move(group_of), recs = std::move(recs),
         values = r](ad::Tape& t, const Tensor& g) {
            // Subject k sits in the risk set of every group at or before its
            // own in the sweep, i.e. groups [group_of[k], end).
            std::vector<double> tail(groups.size() + 1, 0.0);
            for (std::size_t q = groups.size(); q-- > 0;)
                tail[q] = tail[q + 1] + (groups[q].events > 0.0 ? groups[q].events / groups[q].risk_sum : 0.0);
            Tensor* gr = t.grad_sink(ir);
            if (gr == nullptr) return;
            const double up = g.item();
            for (std::size_t k = 0; k < recs.size(); ++k) {
                const double dk = std::exp(values[k] - shift) * tail[group_of[k]] - (recs[k].event == 1 ? 1.0 : 0.0);
                (*gr)[k] += up * dk;
            }
        });
}

double cox_npll(std::span<const double> risks, std::span<const SurvivalRecord> records) {
    ad::Tape tape;
    return cox_npll(tape.constant(Tensor::column(risks)), records).value().item();
}

} // namespace supgcl
