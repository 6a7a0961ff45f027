#include <gtest/gtest.h>

#include <cmath>

#include "supgcl/bayesnet.hpp"
#include "supgcl/synth.hpp"

using namespace supgcl;

TEST(GenerateTruth, ZeroDensityIsEmpty) {
    auto t = generate_truth({.n_genes = 10, .density = 0.0, .seed = 1});
    EXPECT_TRUE(t.edges.empty());
}

TEST(GenerateTruth, AcyclicDeterministicAndWeightsAwayFromZero) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SynthSpec spec{.n_genes = 15, .density = 0.3, .seed = seed};
        auto a = generate_truth(spec), b = generate_truth(spec);
        EXPECT_EQ(a.edges, b.edges);
        EXPECT_EQ(a.weights, b.weights);
        ParentSets parents(15);
        for (const Edge& e : a.edges) parents[e.dst].push_back(e.src);
        EXPECT_TRUE(is_acyclic(parents));
        for (double w : a.weights) EXPECT_GE(std::abs(w), spec.weight_min);
    }
}

TEST(SampleExpression, RootVarianceMatchesNoise) {
    SynthSpec spec{.n_genes = 5, .n_knockdown_genes = 2, .density = 0.5, .noise = 0.7, .seed = 2};
    auto t = generate_truth(spec);
    Rng rng(3);
    auto x = sample_expression(t, 20000, rng);
    const std::size_t root = t.order.front();
    double m = 0, v = 0;
    for (double s : x.gene(root)) m += s;
    m /= 20000.0;
    for (double s : x.gene(root)) v += (s - m) * (s - m);
    v /= 19999.0;
    // Sampling s.e. of the variance is about sigma^2 sqrt(2/n) ~ 0.005.
    EXPECT_NEAR(v, 0.49, 0.02);
}

TEST(SampleExpression, ZeroWeightsGiveIndependentColumns) {
    auto t = generate_truth({.n_genes = 4, .n_knockdown_genes = 2, .density = 0.9, .seed = 4});
    for (double& w : t.weights) w = 0.0;
    Rng rng(5);
    auto x = sample_expression(t, 20000, rng);
    for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = a + 1; b < 4; ++b) {
            double ma = 0, mb = 0, c = 0;
            for (std::size_t s = 0; s < 20000; ++s) {
                ma += x(a, s);
                mb += x(b, s);
            }
            ma /= 20000;
            mb /= 20000;
            for (std::size_t s = 0; s < 20000; ++s) c += (x(a, s) - ma) * (x(b, s) - mb);
            EXPECT_NEAR(c / 20000, 0.0, 0.02);
        }
    }
}

TEST(SampleExpression, UnitWeightSmallNoiseCopiesParent) {
    TruthModel t;
    t.vocab = make_vocabulary({"p", "c"});
    t.order = {0, 1};
    t.edges = {{0, 1}};
    t.weights = {1.0};
    t.basal = {1.0, 0.0};
    t.noise = 1e-9;
    Rng rng(6);
    auto x = sample_expression(t, 10, rng);
    for (std::size_t s = 0; s < 10; ++s) EXPECT_NEAR(x(1, s), x(0, s), 1e-8);
}

TEST(SimulateKnockdown, ClampedGeneIsExactlyZero) {
    auto t = generate_truth({.n_genes = 10, .density = 0.3, .seed = 7});
    Rng rng(8);
    for (const Grn& g : simulate_knockdown(t, 4, 3, 5, rng)) {
        EXPECT_EQ(g.node_features()[4], 0.0);
        EXPECT_EQ(g.edges(), t.edges);
        for (std::size_t k = 0; k < g.num_edges(); ++k)
            if (g.edges()[k].src == 4) EXPECT_EQ(g.edge_features()[k], 0.0);
    }
}

TEST(SimulateKnockdown, SinkKnockdownLeavesOthersInExpectation) {
    auto t = generate_truth({.n_genes = 8, .density = 0.4, .seed = 9});
    const std::size_t sink = t.order.back();
    Rng r1(10), r2(10);
    auto base = sample_expression(t, 4000, r1);
    auto kd = sample_expression(t, 4000, r2, sink);
    for (std::size_t g = 0; g < 8; ++g) {
        if (g == sink) continue;
        // Same noise stream and no descendants: identical draws.
        for (std::size_t s = 0; s < 4000; ++s) EXPECT_EQ(base(g, s), kd(g, s));
    }
}

TEST(SimulateKnockdown, RootKnockdownShrinksPositiveDescendants) {
    // r -> a -> b with positive weights and positive basal levels:
    // E[a] = 1 + 0.8 E[r], E[b] = 1 + 0.5 E[a]; clamping r drops both.
    TruthModel t;
    t.vocab = make_vocabulary({"r", "a", "b"});
    t.order = {0, 1, 2};
    t.edges = {{0, 1}, {1, 2}};
    t.weights = {0.8, 0.5};
    t.basal = {2.0, 1.0, 1.0};
    t.noise = 0.5;
    Rng r1(11), r2(11);
    auto base = sample_expression(t, 20000, r1), kd = sample_expression(t, 20000, r2, 0);
    auto mean = [](std::span<const double> v) {
        double s = 0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    // Closed forms: base E[a] = 2.6, E[b] = 2.3; knockdown E[a] = 1, E[b] = 1.5.
    EXPECT_NEAR(mean(base.gene(1)), 2.6, 0.02);
    EXPECT_NEAR(mean(base.gene(2)), 2.3, 0.02);
    EXPECT_NEAR(mean(kd.gene(1)), 1.0, 0.02);
    EXPECT_NEAR(mean(kd.gene(2)), 1.5, 0.02);
}

TEST(MakeLabels, StructuralRulesAndPositiveSurvival) {
    SynthSpec spec{.n_genes = 20, .n_patients = 50, .density = 0.2, .seed = 12};
    auto d = generate_dataset(spec);
    std::vector<std::size_t> outdeg(20, 0);
    for (const Edge& e : d.truth.edges) ++outdeg[e.src];
    for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(d.labels.bp.bits[i][0], outdeg[i] == 0 ? 1 : 0);
    for (const auto& r : d.labels.survival.records) EXPECT_GT(r.time, 0.0);
    for (std::size_t c : d.labels.subtype.classes) EXPECT_LT(c, spec.n_subtypes);
    for (const auto& row : d.labels.cc.bits) EXPECT_EQ(row[0] + row[1] + row[2] + row[3], 1);
}

TEST(GenerateDataset, Deterministic) {
    SynthSpec spec{.n_genes = 12, .n_patients = 20, .n_knockdown_genes = 4, .seed = 13};
    auto a = generate_dataset(spec), b = generate_dataset(spec);
    EXPECT_EQ(a.patients, b.patients);
    EXPECT_EQ(a.expression, b.expression);
    EXPECT_EQ(a.bank.keys(), b.bank.keys());
    EXPECT_EQ(a.labels.rel.bits, b.labels.rel.bits);
    EXPECT_EQ(a.labels.subtype.classes, b.labels.subtype.classes);
    EXPECT_EQ(a.bank.size(), 4u);
}
