#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <json.hpp>

#include "supgcl/contrastive.hpp"
#include "supgcl/encoder.hpp"
#include "supgcl/grn.hpp"
#include "supgcl/parameters.hpp"

namespace supgcl {

enum class Objective { supgcl, grace };

const char* to_string(Objective o);
Objective objective_from_string(const std::string& s);

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 8;
    double learning_rate = 1e-3;
    double weight_decay = 0.01;
    /// Epochs without a new best validation loss before stopping.
    std::size_t patience = 50;
    double validation_fraction = 0.2;
    std::uint64_t seed = 0;
    Objective objective = Objective::supgcl;
    LossConfig loss;
    EncoderConfig encoder;

    void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);

struct StepRecord {
    std::size_t step = 0;
    std::size_t epoch = 0;
    std::size_t gene_a = 0;
    std::size_t gene_b = 0;
    /// K p(b|a); 1 for the grace objective.
    double weight = 1.0;
    double loss = 0.0;
    double node_term = 0.0;
    double aug_term = 0.0;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double validation_loss = 0.0;
};

struct TrainResult {
    /// Parameters after the epoch with the lowest validation loss.
    ad::ParameterSet params;
    std::vector<StepRecord> steps;
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_validation_loss = 0.0;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> validation_indices;
};

nlohmann::json to_json(const StepRecord& r);
nlohmann::json to_json(const EpochRecord& r);

/// Pretrains the encoder on `patients`.
///
/// Per minibatch: draw (a, b) uniformly from K, draw one teacher per key,
/// encode the teachers and every knockdown of every batch graph, and take the
/// mean over graphs of the one-pair importance-sampled loss (supgcl) or of
/// node_loss(Z^a, Z^b) (grace). Validation loss after each epoch is the exact
/// enumerated objective on held-out graphs using each key's first teacher.
/// Step and epoch records are written to `log` as JSON lines when given.
/// Throws NumericError on a non-finite loss after logging the failing step.
TrainResult pretrain(std::span<const Grn> patients, const TeacherBank& bank, const TrainConfig& cfg,
                     std::ostream* log = nullptr);

/// Mean exact objective over `graphs` with the first teacher of each key.
double validation_loss(std::span<const Grn> graphs, std::span<const std::size_t> indices,
                       const TeacherBank& bank, const Encoder& encoder, const ad::ParameterSet& params,
                       const TrainConfig& cfg);

struct PatientEmbedding {
    EmbeddingMatrix nodes;
    std::vector<double> pooled;
};

/// Encodes every patient; node matrices plus mean-pooled vectors.
std::vector<PatientEmbedding> embed_dataset(std::span<const Grn> patients, const Encoder& encoder,
                                            const ad::ParameterSet& params);

/// {"hidden_dim": d, "records": [{"index", "provenance", "nodes": [[...]], "pooled": [...]}]}
nlohmann::json embeddings_to_json(std::span<const PatientEmbedding> records);
void write_embeddings(std::span<const PatientEmbedding> records, const std::filesystem::path& path);

} // namespace supgcl
