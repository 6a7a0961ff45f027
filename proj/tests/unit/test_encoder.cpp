#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "gradcheck.hpp"
#include "random_graphs.hpp"
#include "supgcl/encoder.hpp"
#include "supgcl/error.hpp"

using namespace supgcl;
using namespace supgcl::ad;
using supgcl::testing::numbered_vocab;
using supgcl::testing::random_grn;

namespace {

using Mat = std::vector<std::vector<double>>;

Mat mat(const Tensor& t) {
    Mat m(t.rows(), std::vector<double>(t.cols()));
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t(i, j);
    return m;
}

std::vector<double> vecmat(const std::vector<double>& x, const Mat& w) {
    std::vector<double> out(w[0].size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += x[i] * w[i][j];
    return out;
}

// Attention pass for one direction written edge by edge: for each receiver,
// per head, softmax over its incoming edges of <q_recv, k_send>/sqrt(w) + alpha*e.
void oracle_pass(const Mat& q, const Mat& k, const Mat& v, const std::vector<double>& alpha,
                 const std::vector<std::pair<std::size_t, std::size_t>>& send_recv, const std::vector<double>& e,
                 std::size_t heads, Mat& out) {
    const std::size_t d = q[0].size(), w = d / heads;
    for (std::size_t node = 0; node < out.size(); ++node) {
        for (std::size_t hd = 0; hd < heads; ++hd) {
            std::vector<std::size_t> in;
            std::vector<double> logits;
            for (std::size_t m = 0; m < send_recv.size(); ++m) {
                if (send_recv[m].second != node) continue;
                double dot = 0;
                for (std::size_t c = hd * w; c < (hd + 1) * w; ++c) dot += q[node][c] * k[send_recv[m].first][c];
                in.push_back(m);
                logits.push_back(dot / std::sqrt(static_cast<double>(w)) + alpha[hd] * e[m]);
            }
            if (in.empty()) continue;
            double mx = logits[0], z = 0;
            for (double l : logits) mx = std::max(mx, l);
            for (double& l : logits) z += (l = std::exp(l - mx));
            for (std::size_t t = 0; t < in.size(); ++t) {
                const double att = logits[t] / z;
                for (std::size_t c = hd * w; c < (hd + 1) * w; ++c)
                    out[node][c] += att * e[in[t]] * v[send_recv[in[t]].first][c];
            }
        }
    }
}

// Reference forward pass of the encoder for one graph.
Mat oracle_encode(const Grn& g, const ParameterSet& p, const EncoderConfig& cfg) {
    const std::size_t n = g.num_nodes(), d = cfg.hidden_dim;
    Mat h(n, std::vector<double>(d));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) h[i][j] = g.node_features()[i] * p[0](0, j) + p[1](0, j);
    std::vector<std::pair<std::size_t, std::size_t>> fwd, rev;
    for (const Edge& e : g.edges()) {
        fwd.emplace_back(e.src, e.dst);
        rev.emplace_back(e.dst, e.src);
    }
    const std::size_t per = cfg.reverse_messages ? 8 : 6;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const std::size_t b = 2 + l * per;
        Mat q, k, v, self, vr;
        for (const auto& hi : h) {
            q.push_back(vecmat(hi, mat(p[b])));
            k.push_back(vecmat(hi, mat(p[b + 1])));
            v.push_back(vecmat(hi, mat(p[b + 2])));
            self.push_back(vecmat(hi, mat(p[b + 4])));
            if (cfg.reverse_messages) vr.push_back(vecmat(hi, mat(p[b + 6])));
        }
        Mat out = self;
        oracle_pass(q, k, v, mat(p[b + 3])[0], fwd, g.edge_features(), cfg.heads, out);
        if (cfg.reverse_messages) oracle_pass(q, k, vr, mat(p[b + 7])[0], rev, g.edge_features(), cfg.heads, out);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                out[i][j] += p[b + 5](0, j);
                if (l + 1 < cfg.layers) out[i][j] = std::tanh(out[i][j]);
            }
        h = out;
    }
    return h;
}

ParameterSet randomized(const Encoder& enc, std::uint64_t seed) {
    ParameterSet p = enc.init_parameters();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (std::size_t i = 0; i < p.size(); ++i)
        for (auto& x : p[i].data()) x += u(rng);
    return p;
}

} // namespace

TEST(EncoderConfig, RejectsInvalid) {
    EXPECT_THROW(Encoder({.layers = 0}), ContractError);
    EXPECT_THROW(Encoder({.hidden_dim = 0}), ContractError);
    EXPECT_THROW(Encoder({.hidden_dim = 6, .heads = 4}), ContractError);
}

TEST(Encoder, OutputShapeIsNodesByHiddenDim) {
    std::mt19937_64 rng(1);
    Encoder enc({.layers = 2, .hidden_dim = 8, .heads = 2});
    Grn g = random_grn(rng, numbered_vocab(9), 0.3);
    EmbeddingMatrix z = enc.encode(g, enc.init_parameters(), "g");
    EXPECT_EQ(z.values.rows(), 9u);
    EXPECT_EQ(z.values.cols(), 8u);
    EXPECT_TRUE(z.values.all_finite());
    EXPECT_EQ(z.provenance, "g");
}

TEST(Encoder, MatchesEdgeByEdgeReferenceForward) {
    std::mt19937_64 rng(2);
    for (bool reverse : {true, false}) {
        EncoderConfig cfg{.layers = 3, .hidden_dim = 6, .heads = 3, .reverse_messages = reverse, .seed = 4};
        Encoder enc(cfg);
        const ParameterSet p = randomized(enc, 9);
        for (int trial = 0; trial < 5; ++trial) {
            Grn g = random_grn(rng, numbered_vocab(7), 0.35);
            const Tensor z = enc.encode(g, p).values;
            const Mat ref = oracle_encode(g, p, cfg);
            for (std::size_t i = 0; i < z.rows(); ++i)
                for (std::size_t j = 0; j < z.cols(); ++j) EXPECT_NEAR(z(i, j), ref[i][j], 1e-12);
        }
    }
}

TEST(Encoder, PermutedGraphGivesRowPermutedEmbeddings) {
    std::mt19937_64 rng(3);
    Encoder enc({.layers = 3, .hidden_dim = 8, .heads = 2, .seed = 1});
    const ParameterSet p = randomized(enc, 5);
    auto v = numbered_vocab(8);
    for (int trial = 0; trial < 5; ++trial) {
        Grn g = random_grn(rng, v, 0.3);
        std::vector<std::size_t> perm(8);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<double> nf(8);
        for (std::size_t i = 0; i < 8; ++i) nf[perm[i]] = g.node_features()[i];
        std::vector<Edge> edges;
        for (const Edge& e : g.edges()) edges.push_back({perm[e.src], perm[e.dst]});
        Grn h(v, edges, nf, g.edge_features());
        const Tensor zg = enc.encode(g, p).values, zh = enc.encode(h, p).values;
        for (std::size_t i = 0; i < 8; ++i)
            for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(zg(i, j), zh(perm[i], j), 1e-12);
    }
}

TEST(Encoder, ZeroedEdgeOnlyChangesItsMessagePathAtOneLayer) {
    // 0 -> 1 -> 2, 3 isolated. Zeroing edge (1->2) at one layer changes only
    // nodes 1 and 2; the reference forward gives the exact new values.
    EncoderConfig cfg{.layers = 1, .hidden_dim = 4, .heads = 2, .seed = 3};
    Encoder enc(cfg);
    const ParameterSet p = randomized(enc, 7);
    auto v = numbered_vocab(4);
    Grn g(v, {{0, 1}, {1, 2}}, {0.4, -1.1, 0.8, 1.5}, {0.9, -0.6});
    Grn masked(v, {{0, 1}, {1, 2}}, {0.4, -1.1, 0.8, 1.5}, {0.9, 0.0});
    const Tensor a = enc.encode(g, p).values, b = enc.encode(masked, p).values;
    const Mat ref = oracle_encode(masked, p, cfg);
    for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_EQ(a(0, j), b(0, j));
        EXPECT_EQ(a(3, j), b(3, j));
        for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(b(i, j), ref[i][j], 1e-12);
    }
    bool differs = false;
    for (std::size_t j = 0; j < 4; ++j) differs |= a(1, j) != b(1, j) || a(2, j) != b(2, j);
    EXPECT_TRUE(differs);
}

TEST(Encoder, OneLayerKnockdownIsLocal) {
    std::mt19937_64 rng(6);
    Encoder enc({.layers = 1, .hidden_dim = 4, .heads = 2, .seed = 2});
    const ParameterSet p = randomized(enc, 1);
    for (int trial = 0; trial < 20; ++trial) {
        Grn g = random_grn(rng, numbered_vocab(10), 0.15);
        const std::size_t a = uniform_index(rng, 10);
        const Tensor z = enc.encode(g, p).values;
        const Tensor zk = enc.encode(apply_knockdown(g, {a}), p).values;
        std::vector<bool> near(10, false);
        near[a] = true;
        for (const Edge& e : g.edges())
            if (e.src == a || e.dst == a) near[e.src] = near[e.dst] = true;
        for (std::size_t i = 0; i < 10; ++i) {
            if (near[i]) continue;
            for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(z(i, j), zk(i, j));
        }
    }
}

TEST(Encoder, BatchedEncodingEqualsSeparateEncoding) {
    std::mt19937_64 rng(10);
    Encoder enc({.layers = 2, .hidden_dim = 4, .heads = 2, .seed = 8});
    const ParameterSet p = enc.init_parameters();
    auto v = numbered_vocab(6);
    Grn g1 = random_grn(rng, v, 0.3), g2 = random_grn(rng, v, 0.3);
    const Grn* both[] = {&g1, &g2};
    GraphBatch batch(both);
    Tape t;
    auto bound = bind(t, p, false);
    Var z = enc.forward(t, bound, batch);
    EXPECT_EQ(Encoder::slice(z, batch, 0).value(), enc.encode(g1, p).values);
    EXPECT_EQ(Encoder::slice(z, batch, 1).value(), enc.encode(g2, p).values);
}

TEST(Encoder, WrongGeneCountIsContractError) {
    Encoder enc({.layers = 1, .hidden_dim = 4, .heads = 1, .num_genes = 5});
    Grn g(numbered_vocab(4), {}, {1, 2, 3, 4}, {});
    EXPECT_THROW(enc.encode(g, enc.init_parameters()), ContractError);
}

TEST(Encoder, ParameterGradientsMatchFiniteDifferences) {
    std::mt19937_64 rng(12);
    EncoderConfig cfg{.layers = 2, .hidden_dim = 4, .heads = 2, .seed = 5};
    Encoder enc(cfg);
    const ParameterSet p = randomized(enc, 3);
    Grn g = random_grn(rng, numbered_vocab(5), 0.4);
    GraphBatch batch(g);
    Tensor probe(5, 4);
    for (auto& x : probe.data()) x = std::uniform_real_distribution<double>(-1, 1)(rng);
    std::vector<Tensor> inputs;
    for (std::size_t i = 0; i < p.size(); ++i) inputs.push_back(p[i]);
    auto f = [&](Tape& t, const std::vector<Var>& vars) {
        return frobenius_inner(enc.forward(t, BoundParameters{vars}, batch), t.constant(probe));
    };
    auto res = supgcl::testing::grad_check(f, inputs);
    EXPECT_LE(res.parameters, 200u);
    EXPECT_LT(res.max_rel_error, 1e-4);
}

TEST(MeanPool, ColumnMeans) {
    EmbeddingMatrix z{Tensor{{1, 2}, {3, 4}}, ""};
    EXPECT_EQ(mean_pool(z), (std::vector<double>{2, 3}));
    EmbeddingMatrix same{Tensor{{0.3, -7}, {0.3, -7}, {0.3, -7}}, ""};
    auto m = mean_pool(same);
    EXPECT_NEAR(m[0], 0.3, 1e-16);
    EXPECT_EQ(m[1], -7);
    EXPECT_THROW(mean_pool(EmbeddingMatrix{Tensor(0, 3), ""}), ContractError);
}

TEST(MeanPool, RowPermutationInvariant) {
    EmbeddingMatrix z{Tensor{{1, 2}, {3, 4}, {5, 7}}, ""};
    EmbeddingMatrix zp{Tensor{{5, 7}, {1, 2}, {3, 4}}, ""};
    auto a = mean_pool(z), b = mean_pool(zp);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(a[j], b[j], 1e-15);
    Tape t;
    auto v = mean_pool(t.constant(z.values)).value();
    EXPECT_NEAR(v(0, 0), a[0], 1e-15);
    EXPECT_NEAR(v(0, 1), a[1], 1e-15);
}
