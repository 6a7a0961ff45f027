#include "supgcl/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>

#include "supgcl/error.hpp"
#include "supgcl/optimizer.hpp"
#include "supgcl/random.hpp"

namespace supgcl {

using ad::Tensor;
using ad::Var;

const char* to_string(Objective o) { return o == Objective::supgcl ? "supgcl" : "grace"; }

Objective objective_from_string(const std::string& s) {
    if (s == "supgcl") return Objective::supgcl;
    if (s == "grace") return Objective::grace;
    throw ContractError("unknown objective '" + s + "' (expected supgcl or grace)");
}

void TrainConfig::validate() const {
    if (epochs == 0) throw ContractError("epochs must be positive");
    if (batch_size == 0) throw ContractError("batch_size must be positive");
    if (!(learning_rate >= 0.0)) throw ContractError("learning_rate must be non-negative");
    if (!(weight_decay >= 0.0)) throw ContractError("weight_decay must be non-negative");
    if (patience == 0) throw ContractError("patience must be positive");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        throw ContractError("validation_fraction must lie in (0, 1)");
    }
    loss.validate();
    encoder.validate();
}

nlohmann::json to_json(const TrainConfig& cfg) {
    return {{"epochs", cfg.epochs},
            {"batch_size", cfg.batch_size},
            {"learning_rate", cfg.learning_rate},
            {"weight_decay", cfg.weight_decay},
            {"patience", cfg.patience},
            {"validation_fraction", cfg.validation_fraction},
            {"seed", cfg.seed},
            {"objective", to_string(cfg.objective)},
            {"tau_node", cfg.loss.tau_node},
            {"tau_aug", cfg.loss.tau_aug},
            {"normalize_frobenius", cfg.loss.normalize_frobenius},
            {"encoder", to_json(cfg.encoder)}};
}

nlohmann::json to_json(const StepRecord& r) {
    return {{"type", "step"},         {"step", r.step},   {"epoch", r.epoch},
            {"a", r.gene_a},          {"b", r.gene_b},    {"weight", r.weight},
            {"loss", r.loss},         {"node_term", r.node_term}, {"aug_term", r.aug_term}};
}

nlohmann::json to_json(const EpochRecord& r) {
    return {{"type", "epoch"},
            {"epoch", r.epoch},
            {"train_loss", r.train_loss},
            {"validation_loss", r.validation_loss}};
}

namespace {

void check_inputs(std::span<const Grn> patients, const TeacherBank& bank) {
    if (patients.size() < 2) throw ContractError("pretraining needs at least two patient graphs");
    const auto& vocab = bank.vocab();
    for (std::size_t i = 0; i < patients.size(); ++i) {
        if (!patients[i].vocab() || !(*patients[i].vocab() == *vocab)) {
            throw ContractError("patient graph " + std::to_string(i) +
                                " does not share the teacher vocabulary");
        }
    }
}

// Embeddings of one encoder pass over teachers and patient knockdowns.
struct ViewSet {
    std::vector<Var> teacher;
    std::vector<std::vector<Var>> patient;
};

// Encodes teachers[c] and, for every graph, the knockdowns listed in `genes`
// (positions into `keys`), all in one batch.
ViewSet encode_views(ad::Tape& tape, const ad::BoundParameters& bound, const Encoder& encoder,
                     std::span<const Grn* const> teachers, std::span<const Grn* const> graphs,
                     std::span<const std::size_t> keys, std::span<const std::size_t> genes) {
    std::vector<Grn> knocked;
    knocked.reserve(graphs.size() * genes.size());
    for (const Grn* g : graphs)
        for (std::size_t c : genes) knocked.push_back(apply_knockdown(*g, {keys[c]}));
    std::vector<const Grn*> all(teachers.begin(), teachers.end());
    for (const Grn& g : knocked) all.push_back(&g);
    GraphBatch batch(all);
    Var z = encoder.forward(tape, bound, batch);

    ViewSet v;
    std::size_t slot = 0;
    for (; slot < teachers.size(); ++slot) v.teacher.push_back(Encoder::slice(z, batch, slot));
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
        std::vector<Var> views;
        for (std::size_t c = 0; c < genes.size(); ++c, ++slot) views.push_back(Encoder::slice(z, batch, slot));
        v.patient.push_back(std::move(views));
    }
    return v;
}

std::vector<std::size_t> all_positions(std::size_t k) {
    std::vector<std::size_t> p(k);
    std::iota(p.begin(), p.end(), 0);
    return p;
}

} // namespace

double validation_loss(std::span<const Grn> graphs, std::span<const std::size_t> indices,
                       const TeacherBank& bank, const Encoder& encoder, const ad::ParameterSet& params,
                       const TrainConfig& cfg) {
    if (indices.empty()) throw ContractError("validation set is empty");
    const auto& keys = bank.keys();
    const auto positions = all_positions(keys.size());
    std::vector<const Grn*> teachers;
    for (std::size_t key : keys) teachers.push_back(&bank.teachers(key).front());
    std::vector<const Grn*> selected;
    for (std::size_t i : indices) selected.push_back(&graphs[i]);

    ad::Tape tape;
    auto bound = ad::bind(tape, params, false);
    ViewSet v = encode_views(tape, bound, encoder, teachers, selected, keys, positions);
    double total = 0.0;
    for (const auto& z : v.patient) {
        const Var l = cfg.objective == Objective::supgcl ? supgcl_loss_exact(v.teacher, z, cfg.loss)
                                                         : node_loss_uniform(z, cfg.loss.tau_node);
        total += l.value().item();
    }
    return total / static_cast<double>(indices.size());
}

TrainResult pretrain(std::span<const Grn> patients, const TeacherBank& bank, const TrainConfig& cfg,
                     std::ostream* log) {
    cfg.validate();
    check_inputs(patients, bank);

    EncoderConfig ecfg = cfg.encoder;
    ecfg.num_genes = bank.vocab()->size();
    Encoder encoder(ecfg);
    ad::ParameterSet params = encoder.init_parameters();
    ad::AdamW optimizer({.learning_rate = cfg.learning_rate, .weight_decay = cfg.weight_decay});

    TrainResult result;
    std::vector<std::size_t> order = all_positions(patients.size());
    Rng split_rng(derive_seed(cfg.seed, 0));
    std::shuffle(order.begin(), order.end(), split_rng);
    const auto n_val = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(patients.size()))), 1,
        patients.size() - 1);
    result.validation_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    result.train_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(result.validation_indices.begin(), result.validation_indices.end());
    std::sort(result.train_indices.begin(), result.train_indices.end());

    const auto& keys = bank.keys();
    const std::size_t k = keys.size();
    const auto positions = all_positions(k);
    Rng rng(derive_seed(cfg.seed, 1));

    auto emit = [log](const nlohmann::json& j) {
        if (log) *log << j.dump() << '\n';
    };

    result.params = params;
    result.best_validation_loss = std::numeric_limits<double>::infinity();
    std::size_t step = 0;
    std::vector<std::size_t> train = result.train_indices;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(train.begin(), train.end(), rng);
        double epoch_loss = 0.0;
        std::size_t epoch_steps = 0;
        for (std::size_t start = 0; start < train.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(train.size(), start + cfg.batch_size);
            const std::size_t a = uniform_index(rng, k);
            const std::size_t b = uniform_index(rng, k);
            std::vector<const Grn*> graphs;
            for (std::size_t i = start; i < end; ++i) graphs.push_back(&patients[train[i]]);

            ad::Tape tape;
            auto bound = ad::bind(tape, params);
            StepRecord rec{.step = step, .epoch = epoch, .gene_a = keys[a], .gene_b = keys[b]};
            std::vector<Var> losses;
            if (cfg.objective == Objective::supgcl) {
                std::vector<const Grn*> teachers;
                for (std::size_t c = 0; c < k; ++c) teachers.push_back(&sample_teacher(bank, {keys[c]}, rng));
                ViewSet v = encode_views(tape, bound, encoder, teachers, graphs, keys, positions);
                for (const auto& z : v.patient) {
                    SampledLoss s = supgcl_loss_sampled(v.teacher, z, a, b, cfg.loss);
                    losses.push_back(s.loss);
                    rec.weight = s.weight;
                    rec.node_term += s.node_term.value().item();
                    rec.aug_term += s.aug_term.value().item();
                }
            } else {
                const std::size_t pair[] = {a, b};
                ViewSet v = encode_views(tape, bound, encoder, {}, graphs, keys, pair);
                for (const auto& z : v.patient) {
                    Var l = node_loss(z[0], z[1], cfg.loss.tau_node);
                    losses.push_back(l);
                    rec.node_term += l.value().item();
                }
            }
            const double inv = 1.0 / static_cast<double>(losses.size());
            Var loss = ad::scale(ad::sum(ad::concat_rows(losses)), inv);
            rec.loss = loss.value().item();
            rec.node_term *= inv;
            rec.aug_term *= inv;
            if (!std::isfinite(rec.loss)) {
                nlohmann::json diag = to_json(rec);
                diag["type"] = "error";
                emit(diag);
                throw NumericError("non-finite training loss at step " + std::to_string(step) + " (epoch " +
                                   std::to_string(epoch) + ", a=" + std::to_string(rec.gene_a) +
                                   ", b=" + std::to_string(rec.gene_b) + ")");
            }
            tape.backward(loss);
            optimizer.step(params, ad::gradients(tape, bound));
            emit(to_json(rec));
            result.steps.push_back(rec);
            epoch_loss += rec.loss;
            ++epoch_steps;
            ++step;
        }

        EpochRecord er{.epoch = epoch,
                       .train_loss = epoch_loss / static_cast<double>(epoch_steps),
                       .validation_loss = validation_loss(patients, result.validation_indices, bank, encoder,
                                                          params, cfg)};
        if (!std::isfinite(er.validation_loss)) {
            throw NumericError("non-finite validation loss after epoch " + std::to_string(epoch));
        }
        emit(to_json(er));
        result.epochs.push_back(er);
        if (er.validation_loss < result.best_validation_loss) {
            result.best_validation_loss = er.validation_loss;
            result.best_epoch = epoch;
            result.params = params;
        } else if (epoch - result.best_epoch >= cfg.patience) {
            break;
        }
    }
    return result;
}

std::vector<PatientEmbedding> embed_dataset(std::span<const Grn> patients, const Encoder& encoder,
                                            const ad::ParameterSet& params) {
    std::vector<PatientEmbedding> out;
    out.reserve(patients.size());
    for (std::size_t i = 0; i < patients.size(); ++i) {
        PatientEmbedding e;
        e.nodes = encoder.encode(patients[i], params, "patient:" + std::to_string(i));
        e.pooled = mean_pool(e.nodes);
        out.push_back(std::move(e));
    }
    return out;
}

nlohmann::json embeddings_to_json(std::span<const PatientEmbedding> records) {
    nlohmann::json arr = nlohmann::json::array();
    std::size_t d = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const Tensor& v = records[i].nodes.values;
        d = v.cols();
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t r = 0; r < v.rows(); ++r) {
            auto row = v.row(r);
            rows.push_back(std::vector<double>(row.begin(), row.end()));
        }
        arr.push_back({{"index", i},
                       {"provenance", records[i].nodes.provenance},
                       {"nodes", std::move(rows)},
                       {"pooled", records[i].pooled}});
    }
    return {{"hidden_dim", d}, {"records", std::move(arr)}};
}

void write_embeddings(std::span<const PatientEmbedding> records, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write embeddings file " + path.string());
    out << embeddings_to_json(records).dump() << '\n';
}

} // namespace supgcl
