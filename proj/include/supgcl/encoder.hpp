#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "supgcl/grn.hpp"
#include "supgcl/ops.hpp"
#include "supgcl/parameters.hpp"

namespace supgcl {

struct EncoderConfig {
    std::size_t layers = 5;
    std::size_t hidden_dim = 64;
    std::size_t heads = 4;
    /// Also aggregate messages against edge direction (dst -> src).
    bool reverse_messages = true;
    /// Required node count of input graphs; 0 accepts any size.
    std::size_t num_genes = 0;
    std::uint64_t seed = 0;

    /// Throws ContractError unless layers >= 1, hidden_dim >= 1 and heads divides hidden_dim.
    void validate() const;
};

nlohmann::json to_json(const EncoderConfig& cfg);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

/// Disjoint union of several GRNs, encoded in one pass. Node i of graph g
/// becomes row node_offset(g) + i of the output.
class GraphBatch {
public:
    explicit GraphBatch(std::span<const Grn* const> graphs);
    explicit GraphBatch(const Grn& g);

    std::size_t num_graphs() const { return offsets_.size() - 1; }
    std::size_t num_nodes() const { return offsets_.back(); }
    std::size_t node_offset(std::size_t g) const { return offsets_[g]; }
    std::size_t nodes_in(std::size_t g) const { return offsets_[g + 1] - offsets_[g]; }
    const std::vector<std::size_t>& src() const { return src_; }
    const std::vector<std::size_t>& dst() const { return dst_; }
    const ad::Tensor& node_features() const { return node_features_; }
    const ad::Tensor& edge_features() const { return edge_features_; }

private:
    std::vector<std::size_t> offsets_;
    std::vector<std::size_t> src_;
    std::vector<std::size_t> dst_;
    ad::Tensor node_features_;
    ad::Tensor edge_features_;
};

/// Per-node embeddings of one graph: |V| x d.
struct EmbeddingMatrix {
    ad::Tensor values;
    std::string provenance;
};

/// Attention-style message-passing encoder.
///
/// Input lift: h_i = x_i * w_in + b_in. Each layer computes per-head
/// attention over the in-edges of every node,
///   logit_k = <q_dst, k_src> / sqrt(width) + alpha * e_k,
/// normalizes it per destination, and sends the message att_k * e_k * v_src.
/// Because every message is scaled by its edge feature, masked edges
/// contribute nothing. An optional mirror pass sends messages from dst to
/// src with its own value map and edge weight. The layer output is
/// h W_self + b + messages, through tanh on all but the final layer.
class Encoder {
public:
    explicit Encoder(EncoderConfig config);

    const EncoderConfig& config() const { return config_; }

    /// Fresh parameters: every tensor ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in))
    /// from config.seed. Nonzero biases keep isolated zero-feature nodes off
    /// the origin, where cosine similarity is undefined.
    ad::ParameterSet init_parameters() const;

    /// num_nodes x hidden_dim embeddings for the whole batch.
    ad::Var forward(ad::Tape& tape, const ad::BoundParameters& params, const GraphBatch& batch) const;

    /// Rows of graph `g` out of a batch embedding.
    static ad::Var slice(ad::Var batch_embeddings, const GraphBatch& batch, std::size_t g);

    /// Convenience: encode one graph without tracking gradients.
    EmbeddingMatrix encode(const Grn& g, const ad::ParameterSet& params,
                           std::string provenance = {}) const;

private:
    void check_batch(const GraphBatch& batch) const;

    EncoderConfig config_;
};

/// Column means of the embedding matrix; the graph-level readout.
std::vector<double> mean_pool(const EmbeddingMatrix& z);
ad::Var mean_pool(ad::Var z);

} // namespace supgcl
