#include "supgcl/encoder.hpp"

#include <array>
#include <cmath>
#include <numeric>

#include "supgcl/error.hpp"
#include "supgcl/random.hpp"

namespace supgcl {

using ad::Tensor;
using ad::Var;

void EncoderConfig::validate() const {
    if (layers < 1) throw ContractError("encoder needs at least one layer");
    if (hidden_dim < 1) throw ContractError("encoder hidden_dim must be positive");
    if (heads < 1 || hidden_dim % heads != 0) {
        throw ContractError("encoder heads (" + std::to_string(heads) +
                            ") must divide hidden_dim (" + std::to_string(hidden_dim) + ")");
    }
}

nlohmann::json to_json(const EncoderConfig& cfg) {
    return {{"layers", cfg.layers},       {"hidden_dim", cfg.hidden_dim},
            {"heads", cfg.heads},         {"reverse_messages", cfg.reverse_messages},
            {"num_genes", cfg.num_genes}, {"seed", cfg.seed}};
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
    EncoderConfig c;
    c.layers = j.value("layers", c.layers);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.heads = j.value("heads", c.heads);
    c.reverse_messages = j.value("reverse_messages", c.reverse_messages);
    c.num_genes = j.value("num_genes", c.num_genes);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

GraphBatch::GraphBatch(std::span<const Grn* const> graphs) {
    offsets_.push_back(0);
    std::size_t n_edges = 0;
    for (const Grn* g : graphs) {
        offsets_.push_back(offsets_.back() + g->num_nodes());
        n_edges += g->num_edges();
    }
    node_features_ = Tensor(offsets_.back(), 1);
    edge_features_ = Tensor(n_edges, 1);
    src_.reserve(n_edges);
    dst_.reserve(n_edges);
    std::size_t k = 0;
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
        const Grn& g = *graphs[gi];
        const std::size_t off = offsets_[gi];
        for (std::size_t i = 0; i < g.num_nodes(); ++i) node_features_[off + i] = g.node_features()[i];
        for (std::size_t e = 0; e < g.num_edges(); ++e, ++k) {
            src_.push_back(off + g.edges()[e].src);
            dst_.push_back(off + g.edges()[e].dst);
            edge_features_[k] = g.edge_features()[e];
        }
    }
}

GraphBatch::GraphBatch(const Grn& g) : GraphBatch(std::span<const Grn* const>(std::array<const Grn*, 1>{&g})) {}

Encoder::Encoder(EncoderConfig config) : config_(config) { config_.validate(); }

ad::ParameterSet Encoder::init_parameters() const {
    Rng rng(config_.seed);
    const std::size_t d = config_.hidden_dim;
    const std::size_t h = config_.heads;
    auto uniform = [&rng](std::size_t rows, std::size_t cols, double fan_in) {
        const double bound = 1.0 / std::sqrt(fan_in);
        std::uniform_real_distribution<double> dist(-bound, bound);
        Tensor t(rows, cols);
        for (auto& v : t.data()) v = dist(rng);
        return t;
    };
    ad::ParameterSet p;
    p.add("in.w", uniform(1, d, 1.0));
    p.add("in.b", uniform(1, d, 1.0));
    for (std::size_t l = 0; l < config_.layers; ++l) {
        const std::string pre = "layer" + std::to_string(l) + ".";
        p.add(pre + "wq", uniform(d, d, static_cast<double>(d)));
        p.add(pre + "wk", uniform(d, d, static_cast<double>(d)));
        p.add(pre + "wv", uniform(d, d, static_cast<double>(d)));
        p.add(pre + "edge", uniform(1, h, 1.0));
        p.add(pre + "wself", uniform(d, d, static_cast<double>(d)));
        p.add(pre + "b", uniform(1, d, static_cast<double>(d)));
        if (config_.reverse_messages) {
            p.add(pre + "wv_rev", uniform(d, d, static_cast<double>(d)));
            p.add(pre + "edge_rev", uniform(1, h, 1.0));
        }
    }
    return p;
}

void Encoder::check_batch(const GraphBatch& batch) const {
    if (config_.num_genes == 0) return;
    for (std::size_t g = 0; g < batch.num_graphs(); ++g) {
        if (batch.nodes_in(g) != config_.num_genes) {
            throw ContractError("graph has " + std::to_string(batch.nodes_in(g)) +
                                " genes but the encoder was built for " +
                                std::to_string(config_.num_genes));
        }
    }
}

Var Encoder::forward(ad::Tape& tape, const ad::BoundParameters& params, const GraphBatch& batch) const {
    check_batch(batch);
    const std::size_t per_layer = config_.reverse_messages ? 8 : 6;
    if (params.vars.size() != 2 + per_layer * config_.layers) {
        throw ContractError("encoder parameter count does not match its configuration");
    }
    const std::size_t n = batch.num_nodes();
    const std::size_t heads = config_.heads;
    const double inv_sqrt_w = 1.0 / std::sqrt(static_cast<double>(config_.hidden_dim / heads));

    Var x = tape.constant(batch.node_features());
    Var e = tape.constant(batch.edge_features());
    Var h = ad::add_row(ad::matmul(x, params[0]), params[1]);

    for (std::size_t l = 0; l < config_.layers; ++l) {
        const std::size_t base = 2 + l * per_layer;
        const Var& wq = params[base];
        const Var& wk = params[base + 1];
        const Var& wv = params[base + 2];
        const Var& alpha = params[base + 3];
        const Var& wself = params[base + 4];
        const Var& bias = params[base + 5];

        Var q = ad::matmul(h, wq);
        Var k = ad::matmul(h, wk);
        Var v = ad::matmul(h, wv);

        Var logits = ad::add(ad::scale(ad::head_dot(ad::gather_rows(q, batch.dst()),
                                                    ad::gather_rows(k, batch.src()), heads),
                                       inv_sqrt_w),
                             ad::matmul(e, alpha));
        Var att = ad::segment_softmax(logits, batch.dst(), n);
        Var msg = ad::scale_head_blocks(ad::gather_rows(v, batch.src()), ad::mul_rows(att, e));
        Var pre = ad::add(ad::matmul(h, wself), ad::scatter_add_rows(msg, batch.dst(), n));

        if (config_.reverse_messages) {
            const Var& wv_rev = params[base + 6];
            const Var& alpha_rev = params[base + 7];
            Var v_rev = ad::matmul(h, wv_rev);
            Var logits_rev = ad::add(ad::scale(ad::head_dot(ad::gather_rows(q, batch.src()),
                                                            ad::gather_rows(k, batch.dst()), heads),
                                               inv_sqrt_w),
                                     ad::matmul(e, alpha_rev));
            Var att_rev = ad::segment_softmax(logits_rev, batch.src(), n);
            Var msg_rev =
                ad::scale_head_blocks(ad::gather_rows(v_rev, batch.dst()), ad::mul_rows(att_rev, e));
            pre = ad::add(pre, ad::scatter_add_rows(msg_rev, batch.src(), n));
        }
        pre = ad::add_row(pre, bias);
        h = (l + 1 < config_.layers) ? ad::tanh(pre) : pre;
    }
    return h;
}

Var Encoder::slice(Var batch_embeddings, const GraphBatch& batch, std::size_t g) {
    std::vector<std::size_t> idx(batch.nodes_in(g));
    std::iota(idx.begin(), idx.end(), batch.node_offset(g));
    return ad::gather_rows(batch_embeddings, idx);
}

EmbeddingMatrix Encoder::encode(const Grn& g, const ad::ParameterSet& params, std::string provenance) const {
    ad::Tape tape;
    auto bound = ad::bind(tape, params, false);
    Var z = forward(tape, bound, GraphBatch(g));
    return {z.value(), std::move(provenance)};
}

std::vector<double> mean_pool(const EmbeddingMatrix& z) {
    const Tensor& v = z.values;
    if (v.rows() == 0) throw ContractError("mean_pool of an empty embedding matrix");
    std::vector<double> out(v.cols(), 0.0);
    for (std::size_t i = 0; i < v.rows(); ++i)
        for (std::size_t j = 0; j < v.cols(); ++j) out[j] += v(i, j);
    const double inv = 1.0 / static_cast<double>(v.rows());
    for (double& o : out) o *= inv;
    return out;
}

Var mean_pool(Var z) { return ad::mean_rows(z); }

} // namespace supgcl
