#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "chain.hpp"
#include "supgcl/bayesnet.hpp"
#include "supgcl/bspline.hpp"
#include "supgcl/error.hpp"

using namespace supgcl;

namespace {

ExpressionMatrix matrix_of(const std::vector<std::vector<double>>& genes) {
    std::vector<std::string> names, ids;
    for (std::size_t g = 0; g < genes.size(); ++g) names.push_back("x" + std::to_string(g));
    for (std::size_t s = 0; s < genes[0].size(); ++s) ids.push_back("s" + std::to_string(s));
    std::vector<double> v;
    for (const auto& g : genes) v.insert(v.end(), g.begin(), g.end());
    return ExpressionMatrix(make_vocabulary(names), ids, v);
}

std::vector<double> normals(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
    std::normal_distribution<double> d(0.0, sd);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

} // namespace

TEST(Bspline, PartitionOfUnityOnInterior) {
    std::mt19937_64 rng(1);
    auto values = normals(rng, 300);
    const BsplineBasis b = quantile_basis(values, 10, 3);
    std::uniform_real_distribution<double> u(b.lo(), b.hi());
    for (int k = 0; k < 2000; ++k) {
        const auto v = b(u(rng));
        double s = 0;
        for (double x : v) {
            EXPECT_GE(x, 0.0);
            s += x;
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Bspline, SumsToOneAtKnots) {
    const BsplineBasis b = uniform_basis(-1.0, 3.0, 8, 3);
    for (double k : b.knots()) {
        double s = 0;
        for (double x : b(k)) s += x;
        EXPECT_NEAR(s, 1.0, 1e-12) << k;
    }
}

TEST(Bspline, LinearHatsSplitEvenlyBetweenKnots) {
    const BsplineBasis b = uniform_basis(0.0, 4.0, 5, 1);
    const auto v = b(1.5);
    const std::vector<double> expected = {0.0, 0.5, 0.5, 0.0, 0.0};
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(v[k], expected[k], 1e-15);
}

TEST(Bspline, OutOfDomainIsClamped) {
    const BsplineBasis b = uniform_basis(0.0, 1.0, 6, 3);
    std::vector<double> out(6), at_hi(6);
    EXPECT_TRUE(b.evaluate(5.0, out));
    EXPECT_FALSE(b.evaluate(1.0, at_hi));
    EXPECT_EQ(out, at_hi);
}

TEST(FitRegression, RecoversIdentity) {
    std::mt19937_64 rng(2);
    auto x = normals(rng, 400);
    const NodeFit f = fit_regression(x, {x});
    for (double t : {-1.5, -0.3, 0.0, 0.7, 2.0}) EXPECT_NEAR(f.curves[0](t), t, 1e-3);
    EXPECT_LT(f.noise_var, 1e-6);
    EXPECT_EQ(f.parameters, 11u);
}

TEST(FitRegression, IndependentParentGivesFlatCurve) {
    std::mt19937_64 rng(3);
    auto x = normals(rng, 2000), y = normals(rng, 2000, 2.0);
    double mean = 0, var = 0;
    for (double v : y) mean += v;
    mean /= 2000.0;
    for (double v : y) var += (v - mean) * (v - mean);
    var /= 2000.0;
    const NodeFit f = fit_regression(y, {x});
    EXPECT_NEAR(f.noise_var, var, 0.02 * var);
    for (double t : {-1.0, 0.0, 1.0}) EXPECT_NEAR(f.curves[0](t), mean, 0.3);
}

TEST(FitRegression, ConstantParentGivesConstantPrediction) {
    std::mt19937_64 rng(4);
    auto y = normals(rng, 50);
    std::vector<double> x(50, 3.0);
    const NodeFit f = fit_regression(y, {x});
    EXPECT_TRUE(std::isfinite(f.log_likelihood));
    const double p = f.curves[0](3.0);
    double mean = 0;
    for (double v : y) mean += v;
    EXPECT_NEAR(p, mean / 50.0, 1e-2);
}

TEST(NetworkScore, TrueChainBeatsEmptyGraph) {
    auto truth = supgcl::testing::chain_truth(4);
    Rng rng(5);
    auto data = sample_expression(truth, 300, rng);
    ParentSets empty(4), chain = {{}, {0}, {1}, {2}};
    EXPECT_GT(network_score(chain, data), network_score(empty, data));
    EXPECT_EQ(network_score(chain, data), network_score(chain, data));
}

TEST(NetworkScore, DuplicateParentLowersScore) {
    std::mt19937_64 rng(6);
    auto x = normals(rng, 300), noise = normals(rng, 300, 0.5), tiny = normals(rng, 300, 1e-3);
    std::vector<double> y(300), x2(300);
    for (std::size_t s = 0; s < 300; ++s) {
        y[s] = x[s] + noise[s];
        x2[s] = x[s] + tiny[s];
    }
    auto data = matrix_of({x, x2, y});
    ParentSets one = {{}, {0}, {0}}, both = {{}, {0}, {0, 1}};
    EXPECT_LT(network_score(both, data), network_score(one, data));
}

TEST(HillClimb, TwoDependentVariablesGetOneEdge) {
    std::mt19937_64 rng(7);
    auto x = normals(rng, 300), e = normals(rng, 300, 0.5);
    std::vector<double> y(300);
    for (std::size_t s = 0; s < 300; ++s) y[s] = 0.9 * x[s] + e[s];
    auto res = hill_climb(matrix_of({x, y}));
    EXPECT_EQ(res.parents[0].size() + res.parents[1].size(), 1u);
}

TEST(HillClimb, IndependentColumnsGiveEmptyGraph) {
    std::mt19937_64 rng(8);
    auto res = hill_climb(matrix_of({normals(rng, 300), normals(rng, 300), normals(rng, 300), normals(rng, 300)}));
    std::size_t edges = 0;
    for (const auto& p : res.parents) edges += p.size();
    EXPECT_LE(edges, 1u);
}

TEST(HillClimb, ScoreNeverDecreasesAndResultIsAcyclic) {
    SynthSpec spec{.n_genes = 8, .n_patients = 200, .n_knockdown_genes = 2, .density = 0.4, .seed = 9};
    auto truth = generate_truth(spec);
    Rng rng(9);
    auto data = sample_expression(truth, 200, rng);
    auto res = hill_climb(data, {.max_parents = 3});
    for (std::size_t k = 1; k < res.score_trace.size(); ++k) EXPECT_GE(res.score_trace[k], res.score_trace[k - 1]);
    EXPECT_TRUE(is_acyclic(res.parents));
    for (const auto& p : res.parents) EXPECT_LE(p.size(), 3u);
    EXPECT_NEAR(res.score_trace.back(), network_score(res.parents, data), 1e-6);
}

TEST(Bootstrap, SingleRunEqualsHillClimb) {
    auto truth = supgcl::testing::chain_truth(5);
    Rng rng(10);
    auto data = sample_expression(truth, 200, rng);
    BootstrapOptions opt{.runs = 1, .threshold = 1.0, .seed = 4};
    auto res = bootstrap_structure(data, opt);
    // Reproduce the single resample.
    Rng r(derive_seed(4, 0));
    std::vector<std::size_t> cols(200);
    for (auto& c : cols) c = uniform_index(r, 200);
    auto hc = hill_climb(data.select_samples(cols), opt.search);
    std::vector<Edge> expected;
    for (std::size_t i = 0; i < hc.parents.size(); ++i)
        for (std::size_t j : hc.parents[i]) expected.push_back({j, i});
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(res.edges, expected);
}

TEST(Bootstrap, ReproducibleAndThreadIndependent) {
    auto truth = supgcl::testing::chain_truth(6);
    Rng rng(11);
    auto data = sample_expression(truth, 200, rng);
    BootstrapOptions a{.runs = 12, .threshold = 0.05, .seed = 7, .threads = 1};
    BootstrapOptions b = a;
    b.threads = 3;
    auto ra = bootstrap_structure(data, a);
    auto rb = bootstrap_structure(data, b);
    EXPECT_EQ(ra.frequencies, rb.frequencies);
    EXPECT_EQ(ra.edges, rb.edges);
}

TEST(Bootstrap, KeepsEdgesAtThreshold) {
    // An edge found in 60 of 1000 runs has frequency 0.06 >= 0.05. Emulate the
    // thresholding rule directly on a frequency map.
    const double freq = 60.0 / 1000.0;
    EXPECT_GE(freq, 0.05);
    auto truth = supgcl::testing::chain_truth(6);
    Rng rng(12);
    auto data = sample_expression(truth, 300, rng);
    auto res = bootstrap_structure(data, {.runs = 20, .threshold = 0.05, .seed = 1});
    for (const auto& [e, f] : res.frequencies) {
        const bool kept = std::binary_search(res.edges.begin(), res.edges.end(), e);
        if (f < 0.05) EXPECT_FALSE(kept);
    }
    ParentSets parents(6);
    for (const Edge& e : res.edges) parents[e.dst].push_back(e.src);
    EXPECT_TRUE(is_acyclic(parents));
}

TEST(DeriveSampleGrns, IdentityCurveGivesParentValue) {
    std::mt19937_64 rng(13);
    auto x = normals(rng, 400);
    auto data = matrix_of({x, x});
    auto net = fit_network({{}, {0}}, data);
    auto grns = derive_sample_grns(net, data);
    ASSERT_EQ(grns.size(), 400u);
    for (const Grn& g : grns) {
        EXPECT_EQ(g.edges(), grns[0].edges());
        // Ridge shrinkage bends the fit in the sparse tails.
        if (std::abs(g.node_features()[0]) < 2.5) EXPECT_NEAR(g.edge_features()[0], g.node_features()[0], 1e-3);
    }
    // Parent value 2.0 evaluated through the same curve.
    EXPECT_NEAR(net.curve(0, 1)(2.0), 2.0, 1e-3);
}

TEST(DeriveSampleGrns, EqualSamplesGiveEqualGraphs) {
    std::mt19937_64 rng(14);
    auto x = normals(rng, 100), y = normals(rng, 100);
    x[7] = x[3];
    y[7] = y[3];
    auto data = matrix_of({x, y});
    auto net = fit_network({{}, {0}}, data);
    auto grns = derive_sample_grns(net, data);
    EXPECT_EQ(grns[3], grns[7]);
}

TEST(DeriveSampleGrns, CountsClampedEvaluations) {
    std::mt19937_64 rng(15);
    auto x = normals(rng, 100), y = normals(rng, 100);
    auto net = fit_network({{}, {0}}, matrix_of({x, y}));
    auto xo = x;
    xo[0] = 100.0;
    std::size_t clamped = 0;
    derive_sample_grns(net, matrix_of({xo, y}), &clamped);
    EXPECT_EQ(clamped, 1u);
}

TEST(ExpressionTsv, RoundTripAndErrors) {
    std::mt19937_64 rng(16);
    auto data = matrix_of({normals(rng, 5), normals(rng, 5)});
    const auto path = std::filesystem::temp_directory_path() / "supgcl_expr.tsv";
    write_expression_tsv(data, path);
    EXPECT_EQ(read_expression_tsv(path), data);
    std::ofstream(path) << "gene\ta\tb\nx\t1\tnope\n";
    EXPECT_THROW(read_expression_tsv(path), ParseError);
    std::ofstream(path) << "gene\ta\tb\nx\t1\n";
    EXPECT_THROW(read_expression_tsv(path), ParseError);
    std::filesystem::remove(path);
}
