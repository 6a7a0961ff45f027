#include "supgcl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "supgcl/bspline.hpp"
#include "supgcl/contrastive.hpp"
#include "supgcl/grn.hpp"
#include "supgcl/heads.hpp"
#include "supgcl/random.hpp"

namespace supgcl {

using ad::Tensor;

nlohmann::json to_json(const CheckResult& r) {
    return {{"name", r.name},           {"passed", r.passed},   {"value", r.value},
            {"tolerance", r.tolerance}, {"detail", r.detail}};
}

namespace {

using Mat = Eigen::MatrixXd;

Mat to_mat(const Tensor& t) {
    Mat m(t.rows(), t.cols());
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < t.cols(); ++j) m(i, j) = t(i, j);
    return m;
}

Tensor random_tensor(Rng& rng, std::size_t r, std::size_t c, double sd = 1.0) {
    std::normal_distribution<double> d(0.0, sd);
    Tensor t(r, c);
    for (auto& v : t.data()) v = d(rng);
    return t;
}

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    return logits.array() - (m + std::log((logits.array() - m).exp().sum()));
}

// K x K matrix of log softmax_b(<M^a, M^b>_F / tau).
Mat log_aug(const std::vector<Mat>& m, double tau) {
    const auto k = static_cast<Eigen::Index>(m.size());
    Mat out(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
        Eigen::VectorXd logits(k);
        for (Eigen::Index b = 0; b < k; ++b) logits(b) = (m[a].array() * m[b].array()).sum() / tau;
        out.row(a) = log_softmax(logits).transpose();
    }
    return out;
}

// Mean over (a, i) of KL between p(j, b | i, a) = [j = i] p(b | a) and
// q(j, b | i, a) = q(j | i; a, b) q(b | a), summing over b and j.
double joint_kl(const std::vector<Mat>& y, const std::vector<Mat>& z, double tau_n, double tau_a) {
    const auto k = static_cast<Eigen::Index>(z.size());
    const Eigen::Index n = z.front().rows();
    const Mat lp = log_aug(y, tau_a), lq = log_aug(z, tau_a);
    std::vector<Mat> unit;
    for (const Mat& m : z) unit.push_back(m.rowwise().normalized());
    double total = 0.0;
    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) {
            const Mat cos = unit[a] * unit[b].transpose() / tau_n;
            const double p = std::exp(lp(a, b));
            for (Eigen::Index i = 0; i < n; ++i) {
                const double lq_node = log_softmax(cos.row(i).transpose())(i);
                total += p * (lp(a, b) - lq_node - lq(a, b));
            }
        }
    }
    return total / static_cast<double>(k * n);
}

CheckResult check(std::string name, double value, double tolerance, std::string detail = {}) {
    return {std::move(name), value < tolerance, value, tolerance, std::move(detail)};
}

CheckResult joint_kl_identity(Rng& rng) {
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Tensor> y, z;
        std::vector<Mat> ym, zm;
        for (int a = 0; a < 5; ++a) {
            y.push_back(random_tensor(rng, 12, 8));
            z.push_back(random_tensor(rng, 12, 8));
            ym.push_back(to_mat(y.back()));
            zm.push_back(to_mat(z.back()));
        }
        const LossConfig cfg{.tau_node = 0.5, .tau_aug = 4.0};
        const double lhs = joint_kl(ym, zm, cfg.tau_node, cfg.tau_aug);
        worst = std::max(worst, std::abs(lhs - supgcl_loss_exact(y, z, cfg)));
    }
    return check("joint_kl_identity", worst, 1e-6, "20 instances, |V|=12, K=5, d=8");
}

// Deviation of p from uniform is about spread(<Y^a, Y^b>_F) / (K tau_a), so the
// entry scale is pinned: sd 0.1 keeps the Frobenius spread near 1.
CheckResult uniform_limit(Rng& rng) {
    std::vector<Tensor> y, z;
    for (int a = 0; a < 5; ++a) {
        y.push_back(random_tensor(rng, 12, 8, 0.1));
        z.push_back(random_tensor(rng, 12, 8, 0.1));
    }
    const double uniform = node_loss_uniform(z, 0.5);
    std::vector<double> gaps;
    for (double tau : {1.0, 10.0, 1e3, 1e6})
        gaps.push_back(std::abs(supgcl_loss_exact(y, z, {.tau_node = 0.5, .tau_aug = tau}) - uniform) / uniform);
    const auto d = aug_distributions(y, z, 1e6);
    double dev = 0.0;
    for (double p : d.p.data()) dev = std::max(dev, std::abs(p - 0.2));
    const bool monotone = std::is_sorted(gaps.rbegin(), gaps.rend()) &&
                          std::adjacent_find(gaps.begin(), gaps.end()) == gaps.end();
    std::ostringstream detail;
    detail << "relative gaps";
    for (double g : gaps) detail << ' ' << g;
    detail << "; max |p - 1/K| " << dev;
    CheckResult r = check("uniform_limit", gaps.back(), 1e-4, detail.str());
    r.passed = r.passed && dev < 1e-6 && monotone;
    return r;
}

CheckResult sampled_enumeration(Rng& rng) {
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<Tensor> y, z;
        for (int a = 0; a < 4; ++a) {
            y.push_back(random_tensor(rng, 6, 4));
            z.push_back(random_tensor(rng, 6, 4));
        }
        const LossConfig cfg{.tau_node = 0.7, .tau_aug = 3.0};
        double mean = 0.0;
        for (std::size_t a = 0; a < 4; ++a)
            for (std::size_t b = 0; b < 4; ++b) mean += supgcl_loss_sampled(y, z, a, b, cfg).loss / 16.0;
        worst = std::max(worst, std::abs(mean - supgcl_loss_exact(y, z, cfg)));
    }
    return check("sampled_enumeration", worst, 1e-10);
}

CheckResult knockdown_masking(Rng& rng) {
    std::size_t failures = 0;
    std::vector<std::string> names;
    for (int i = 0; i < 15; ++i) names.push_back("v" + std::to_string(i));
    auto vocab = make_vocabulary(names);
    std::normal_distribution<double> d;
    std::bernoulli_distribution keep(0.25);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<Edge> edges;
        for (std::size_t s = 0; s < 15; ++s)
            for (std::size_t t = 0; t < 15; ++t)
                if (s != t && keep(rng)) edges.push_back({s, t});
        std::vector<double> nf(15), ef(edges.size());
        for (auto& v : nf) v = d(rng);
        for (auto& v : ef) v = d(rng);
        const Grn g(vocab, edges, nf, ef);
        const std::size_t gene = uniform_index(rng, 15);
        const Grn once = apply_knockdown(g, {gene});
        bool ok = apply_knockdown(once, {gene}) == once && once.edges() == g.edges() && once.node_features()[gene] == 0.0;
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const bool incident = edges[e].src == gene || edges[e].dst == gene;
            ok = ok && once.edge_features()[e] == (incident ? 0.0 : g.edge_features()[e]);
        }
        for (std::size_t i = 0; i < 15; ++i) ok = ok && (i == gene || once.node_features()[i] == g.node_features()[i]);
        failures += ok ? 0 : 1;
    }
    return check("knockdown_masking", static_cast<double>(failures), 0.5, "1000 random cases; value = failures");
}

CheckResult bspline_partition(Rng& rng) {
    std::normal_distribution<double> d;
    std::vector<double> sample(500);
    for (auto& v : sample) v = d(rng);
    const BsplineBasis basis = quantile_basis(sample, 10, 3);
    std::uniform_real_distribution<double> u(basis.lo(), basis.hi());
    std::vector<double> row(basis.size());
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
        basis.evaluate(u(rng), row);
        double s = 0.0;
        for (double v : row) s += v;
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return check("bspline_partition", worst, 1e-12, "10000 interior points");
}

CheckResult cox_shift_invariance(Rng& rng) {
    std::normal_distribution<double> d;
    std::uniform_int_distribution<int> t(1, 20);
    std::bernoulli_distribution e(0.5);
    std::vector<double> risks(50);
    std::vector<SurvivalRecord> recs(50);
    for (auto& r : risks) r = d(rng);
    for (auto& r : recs) r = {static_cast<double>(t(rng)), e(rng) ? 1 : 0};
    recs[0].event = 1;
    const double base = cox_npll(risks, recs);
    double worst = 0.0;
    for (double c : {-5.0, 0.3, 100.0}) {
        auto shifted = risks;
        for (double& r : shifted) r += c;
        worst = std::max(worst, std::abs(cox_npll(shifted, recs) - base));
    }
    return check("cox_shift_invariance", worst, 1e-9, "offsets -5, 0.3, 100");
}

} // namespace

std::vector<CheckResult> run_identity_checks(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<CheckResult> out;
    out.push_back(joint_kl_identity(rng));
    out.push_back(uniform_limit(rng));
    out.push_back(sampled_enumeration(rng));
    out.push_back(knockdown_masking(rng));
    out.push_back(bspline_partition(rng));
    out.push_back(cox_shift_invariance(rng));
    return out;
}

} // namespace supgcl
