#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <json.hpp>

#include "supgcl/bspline.hpp"
#include "supgcl/expression.hpp"
#include "supgcl/grn.hpp"

namespace supgcl {

struct SplineOptions {
    std::size_t num_bases = 10;
    std::size_t degree = 3;
    /// Ridge penalty on spline weights; keeps every design solvable.
    double ridge = 1e-3;
};

struct ScoreOptions {
    SplineOptions spline;
    /// Multiplier of the BIC penalty.
    double kappa = 1.0;
};

/// Gaussian regression of one gene on its parents. With parents the mean is
/// sum_j m_j(x_j) (no separate intercept, each curve's basis already spans
/// constants); without parents it is the sample mean.
struct NodeFit {
    std::vector<std::size_t> parents;
    std::vector<BsplineCurve> curves;
    double mean = 0.0;
    /// Residual variance (maximum likelihood), floored at 1e-12.
    double noise_var = 0.0;
    double log_likelihood = 0.0;
    std::size_t parameters = 0;

    double predict(std::span<const double> parent_values) const;
};

/// Ridge fit with quantile-knot bases built from each parent's values.
NodeFit fit_regression(std::span<const double> child, const std::vector<std::span<const double>>& parents,
                       const SplineOptions& opt = {});

/// Log-likelihood minus kappa * parameters * log(n) / 2.
double local_score(const NodeFit& fit, std::size_t samples, double kappa);

struct BsplineBayesNet {
    VocabularyRef vocab;
    std::vector<NodeFit> nodes;

    /// Parent -> child edges sorted by (src, dst).
    std::vector<Edge> edges() const;
    /// Curve of edge j -> i.
    const BsplineCurve& curve(std::size_t j, std::size_t i) const;
};

using ParentSets = std::vector<std::vector<std::size_t>>;

bool is_acyclic(const ParentSets& parents);

/// Fits every node of the DAG given by `parents` on `data`.
BsplineBayesNet fit_network(const ParentSets& parents, const ExpressionMatrix& data, const SplineOptions& opt = {});

/// Sum of local scores of the DAG refitted on `data`.
double network_score(const ParentSets& parents, const ExpressionMatrix& data, const ScoreOptions& opt = {});
double network_score(const BsplineBayesNet& net, const ExpressionMatrix& data, const ScoreOptions& opt = {});

struct HillClimbOptions {
    ScoreOptions score;
    std::size_t max_iters = 1000;
    std::size_t max_parents = 5;
};

struct HillClimbResult {
    ParentSets parents;
    /// Network score after each accepted move, starting with the empty graph.
    std::vector<double> score_trace;
    std::size_t iterations = 0;
};

/// Greedy search from the empty graph over single-edge add, delete and
/// reverse moves; applies the best acyclic improving move until none
/// remains or max_iters moves were made. Ties go to the first move in
/// (kind, src, dst) order, so the search is deterministic.
HillClimbResult hill_climb(const ExpressionMatrix& data, const HillClimbOptions& opt = {});

struct BootstrapOptions {
    HillClimbOptions search;
    std::size_t runs = 1000;
    double threshold = 0.05;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

struct BootstrapResult {
    /// Directed edge -> fraction of runs containing it.
    std::map<Edge, double> frequencies;
    /// Kept edges after thresholding and cycle repair.
    std::vector<Edge> edges;
    /// Curves refitted on all samples.
    BsplineBayesNet network;
};

/// Hill climbing on `runs` column resamples (with replacement, same size).
/// Edges at or above `threshold` are kept; cycles among them are removed by
/// inserting edges in decreasing frequency and skipping any that would close
/// a cycle. Run r uses a generator seeded from (seed, r).
BootstrapResult bootstrap_structure(const ExpressionMatrix& data, const BootstrapOptions& opt);

/// One GRN per sample: topology of `net`, node features the sample's
/// expression, edge j -> i carrying m_ij(x_j). Adds the number of clamped
/// (out-of-domain) evaluations to `clamped` when given.
std::vector<Grn> derive_sample_grns(const BsplineBayesNet& net, const ExpressionMatrix& data,
                                    std::size_t* clamped = nullptr);

nlohmann::json to_json(const BsplineBayesNet& net);
nlohmann::json frequencies_to_json(const BootstrapResult& r, const GeneVocabulary& vocab,
                                   const BootstrapOptions& opt);

} // namespace supgcl
