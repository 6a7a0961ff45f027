#include "supgcl/finetune.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "supgcl/error.hpp"
#include "supgcl/optimizer.hpp"
#include "supgcl/random.hpp"

namespace supgcl {

using ad::Tensor;
using ad::Var;

TaskSpec task_spec(const std::string& name) {
    if (name == "bp" || name == "cc") return {name, TaskLevel::node, TaskKind::multilabel};
    if (name == "rel") return {name, TaskLevel::node, TaskKind::binary};
    if (name == "subtype") return {name, TaskLevel::graph, TaskKind::multiclass};
    if (name == "survival") return {name, TaskLevel::graph, TaskKind::survival};
    throw ContractError("unknown task '" + name + "' (expected bp, cc, rel, subtype or survival)");
}

const char* to_string(TaskLevel level) { return level == TaskLevel::node ? "node" : "graph"; }

const char* to_string(TaskKind kind) {
    switch (kind) {
    case TaskKind::multilabel: return "multilabel";
    case TaskKind::binary: return "binary";
    case TaskKind::multiclass: return "multiclass";
    case TaskKind::survival: return "survival";
    }
    return "?";
}

std::size_t TaskData::outputs() const {
    switch (spec.kind) {
    case TaskKind::multilabel:
    case TaskKind::binary: return bits.empty() ? 0 : bits.front().size();
    case TaskKind::multiclass: return num_classes;
    case TaskKind::survival: return 1;
    }
    return 0;
}

TaskData node_task(const TaskSpec& spec, const Grn& reference, const BitTable& labels) {
    if (spec.level != TaskLevel::node) throw ContractError("task '" + spec.name + "' is not a node task");
    if (spec.kind != TaskKind::multilabel && spec.kind != TaskKind::binary) {
        throw ContractError("node task '" + spec.name + "' must be multi-label or binary");
    }
    if (spec.kind == TaskKind::binary && labels.columns.size() != 1) {
        throw ContractError("binary task '" + spec.name + "' needs exactly one label column");
    }
    if (labels.ids.empty()) throw ContractError("task '" + spec.name + "' has no labeled genes");
    const auto& vocab = *reference.vocab();
    std::vector<std::pair<std::size_t, std::size_t>> rows;
    for (std::size_t r = 0; r < labels.ids.size(); ++r) {
        const auto idx = vocab.find(labels.ids[r]);
        if (!idx) throw ContractError("label file for '" + spec.name + "' names unknown gene " + labels.ids[r]);
        rows.emplace_back(*idx, r);
    }
    std::sort(rows.begin(), rows.end());
    TaskData t;
    t.spec = spec;
    t.graphs = {reference};
    for (const auto& [node, r] : rows) {
        t.items.push_back(node);
        t.bits.push_back(labels.bits[r]);
    }
    t.excluded = reference.num_nodes() - t.items.size();
    return t;
}

namespace {

std::vector<std::pair<std::size_t, std::size_t>> match_ids(const std::string& task, std::span<const Grn> graphs,
                                                           std::span<const std::string> ids,
                                                           const std::vector<std::string>& label_ids) {
    if (graphs.size() != ids.size()) throw ContractError("graph and id counts differ");
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < ids.size(); ++i) pos.emplace(ids[i], i);
    std::vector<std::pair<std::size_t, std::size_t>> rows;
    for (std::size_t r = 0; r < label_ids.size(); ++r) {
        auto it = pos.find(label_ids[r]);
        if (it == pos.end()) throw ContractError("label file for '" + task + "' names unknown patient " + label_ids[r]);
        rows.emplace_back(it->second, r);
    }
    if (rows.empty()) throw ContractError("task '" + task + "' has no labeled patients");
    std::sort(rows.begin(), rows.end());
    return rows;
}

} // namespace

TaskData graph_task(const TaskSpec& spec, std::span<const Grn> graphs, std::span<const std::string> ids,
                    const ClassTable& labels) {
    if (spec.level != TaskLevel::graph || spec.kind != TaskKind::multiclass) {
        throw ContractError("task '" + spec.name + "' is not a multi-class graph task");
    }
    TaskData t;
    t.spec = spec;
    for (const auto& [g, r] : match_ids(spec.name, graphs, ids, labels.ids)) {
        t.items.push_back(t.graphs.size());
        t.graphs.push_back(graphs[g]);
        t.classes.push_back(labels.classes[r]);
        t.num_classes = std::max(t.num_classes, labels.classes[r] + 1);
    }
    t.excluded = graphs.size() - t.items.size();
    return t;
}

TaskData graph_task(const TaskSpec& spec, std::span<const Grn> graphs, std::span<const std::string> ids,
                    const SurvivalTable& labels) {
    if (spec.level != TaskLevel::graph || spec.kind != TaskKind::survival) {
        throw ContractError("task '" + spec.name + "' is not a survival task");
    }
    TaskData t;
    t.spec = spec;
    for (const auto& [g, r] : match_ids(spec.name, graphs, ids, labels.ids)) {
        t.items.push_back(t.graphs.size());
        t.graphs.push_back(graphs[g]);
        t.survival.push_back(labels.records[r]);
    }
    t.excluded = graphs.size() - t.items.size();
    return t;
}

TaskData assemble_task(const Dataset& dataset, const std::string& name) {
    const TaskSpec spec = task_spec(name);
    const auto path = dataset.label_path(name);
    if (spec.level == TaskLevel::node) {
        if (!dataset.reference) throw MissingInputError("node task '" + name + "' needs a reference graph");
        return node_task(spec, *dataset.reference, read_bit_table(path));
    }
    if (spec.kind == TaskKind::survival) {
        return graph_task(spec, dataset.patients, dataset.patient_ids, read_survival_table(path));
    }
    return graph_task(spec, dataset.patients, dataset.patient_ids, read_class_table(path));
}

std::vector<Split> make_folds(std::size_t n, std::size_t folds, std::uint64_t seed, std::span<const int> strata) {
    if (folds < 2) throw ContractError("need at least two folds");
    if (n < folds) {
        throw ContractError("cannot split " + std::to_string(n) + " items into " + std::to_string(folds) + " folds");
    }
    if (!strata.empty() && strata.size() != n) throw ContractError("strata length differs from item count");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    if (!strata.empty()) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return strata[a] < strata[b]; });
    }
    std::vector<std::size_t> fold_of(n);
    for (std::size_t k = 0; k < n; ++k) fold_of[order[k]] = k % folds;
    std::vector<Split> out(folds);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t f = 0; f < folds; ++f) (f == fold_of[i] ? out[f].test : out[f].train).push_back(i);
    return out;
}

Split undersample_binary(std::span<const int> labels, std::uint64_t seed, double test_fraction) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ContractError("test_fraction must lie in (0, 1)");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
    if (pos.empty() || neg.empty()) throw ContractError("undersample_binary: both classes must be present");
    if (pos.size() < 2 || neg.size() < 2) throw ContractError("undersample_binary: need two items per class");
    Rng rng(seed);
    auto& major = pos.size() > neg.size() ? pos : neg;
    const std::size_t m = std::min(pos.size(), neg.size());
    std::shuffle(major.begin(), major.end(), rng);
    major.resize(m);
    std::sort(major.begin(), major.end());
    // Deterministic per-class shuffle, then the first n_test of each class form the test set.
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);
    const auto n_test = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(m))), 1, m - 1);
    Split s;
    for (const auto* cls : {&pos, &neg})
        for (std::size_t k = 0; k < m; ++k) (k < n_test ? s.test : s.train).push_back((*cls)[k]);
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

void FinetuneConfig::validate() const {
    if (epochs == 0) throw ContractError("finetune epochs must be positive");
    if (batch_size == 0) throw ContractError("finetune batch_size must be positive");
    if (!(learning_rate >= 0.0)) throw ContractError("finetune learning_rate must be non-negative");
    if (!(weight_decay >= 0.0)) throw ContractError("finetune weight_decay must be non-negative");
    if (folds < 2) throw ContractError("finetune folds must be at least 2");
    if (repeats == 0) throw ContractError("finetune repeats must be positive");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ContractError("test_fraction must lie in (0, 1)");
    if (!(threshold > 0.0 && threshold < 1.0)) throw ContractError("threshold must lie in (0, 1)");
}

nlohmann::json to_json(const FinetuneConfig& cfg) {
    return {{"epochs", cfg.epochs},           {"batch_size", cfg.batch_size},
            {"learning_rate", cfg.learning_rate}, {"weight_decay", cfg.weight_decay},
            {"head_hidden", cfg.head_hidden}, {"folds", cfg.folds},
            {"repeats", cfg.repeats},         {"test_fraction", cfg.test_fraction},
            {"freeze_encoder", cfg.freeze_encoder}, {"threshold", cfg.threshold},
            {"seed", cfg.seed}};
}

MetricSummary summarize(std::vector<double> values) {
    if (values.empty()) throw ContractError("no values to summarize");
    MetricSummary m;
    m.values = std::move(values);
    const auto n = static_cast<double>(m.values.size());
    for (double v : m.values) m.mean += v;
    m.mean /= n;
    double ss = 0.0;
    for (double v : m.values) ss += (v - m.mean) * (v - m.mean);
    m.std = std::sqrt(ss / n);
    return m;
}

nlohmann::json to_json(const CvResult& r) {
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& [name, m] : r.metrics) metrics[name] = {{"values", m.values}, {"mean", m.mean}, {"std", m.std}};
    return {{"task", r.spec.name},
            {"level", to_string(r.spec.level)},
            {"kind", to_string(r.spec.kind)},
            {"items", r.items},
            {"excluded", r.excluded},
            {"metrics", metrics}};
}

namespace {

// Features of task items at `positions` (indices into task.items).
Var item_features(ad::Tape& tape, const ad::BoundParameters& bound, const Encoder& encoder, const TaskData& task,
                  std::span<const std::size_t> positions) {
    if (task.spec.level == TaskLevel::node) {
        Var z = encoder.forward(tape, bound, GraphBatch(task.graphs.front()));
        std::vector<std::size_t> nodes;
        for (std::size_t p : positions) nodes.push_back(task.items[p]);
        return ad::gather_rows(z, nodes);
    }
    std::vector<const Grn*> graphs;
    for (std::size_t p : positions) graphs.push_back(&task.graphs[task.items[p]]);
    GraphBatch batch(graphs);
    Var z = encoder.forward(tape, bound, batch);
    std::vector<Var> pooled;
    for (std::size_t g = 0; g < graphs.size(); ++g) pooled.push_back(mean_pool(Encoder::slice(z, batch, g)));
    return ad::concat_rows(pooled);
}

Tensor frozen_features(const TaskData& task, const Encoder& encoder, const ad::ParameterSet& params) {
    ad::Tape tape;
    auto bound = ad::bind(tape, params, false);
    std::vector<std::size_t> all(task.size());
    std::iota(all.begin(), all.end(), 0);
    return item_features(tape, bound, encoder, task, all).value();
}

// Loss on a batch, or nullopt when a survival batch has no events.
std::optional<Var> task_loss(Var logits, const TaskData& task, std::span<const std::size_t> positions) {
    switch (task.spec.kind) {
    case TaskKind::multilabel:
    case TaskKind::binary: {
        Tensor y(positions.size(), task.outputs());
        for (std::size_t r = 0; r < positions.size(); ++r)
            for (std::size_t c = 0; c < y.cols(); ++c) y(r, c) = task.bits[positions[r]][c];
        return binary_cross_entropy(logits, y);
    }
    case TaskKind::multiclass: {
        std::vector<std::size_t> cls;
        for (std::size_t p : positions) cls.push_back(task.classes[p]);
        return multiclass_cross_entropy(logits, cls);
    }
    case TaskKind::survival: {
        std::vector<SurvivalRecord> recs;
        for (std::size_t p : positions) recs.push_back(task.survival[p]);
        if (std::none_of(recs.begin(), recs.end(), [](const SurvivalRecord& r) { return r.event == 1; })) {
            return std::nullopt;
        }
        return cox_npll(logits, recs);
    }
    }
    return std::nullopt;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::map<std::string, double> score(const Tensor& logits, const TaskData& task, std::span<const std::size_t> positions,
                                    double threshold) {
    std::map<std::string, double> out;
    switch (task.spec.kind) {
    case TaskKind::multilabel: {
        BitMatrix pred, truth;
        for (std::size_t r = 0; r < positions.size(); ++r) {
            std::vector<int> row(logits.cols());
            for (std::size_t c = 0; c < logits.cols(); ++c) row[c] = sigmoid(logits(r, c)) >= threshold ? 1 : 0;
            pred.push_back(std::move(row));
            truth.push_back(task.bits[positions[r]]);
        }
        out["subset_accuracy"] = subset_accuracy(pred, truth);
        out["macro_f1"] = macro_f1(pred, truth);
        out["jaccard"] = jaccard_index(pred, truth);
        break;
    }
    case TaskKind::binary: {
        std::vector<std::size_t> pred, truth;
        for (std::size_t r = 0; r < positions.size(); ++r) {
            pred.push_back(sigmoid(logits(r, 0)) >= threshold ? 1 : 0);
            truth.push_back(static_cast<std::size_t>(task.bits[positions[r]][0]));
        }
        out["accuracy"] = accuracy(pred, truth);
        out["macro_f1"] = macro_f1(pred, truth, 2);
        break;
    }
    case TaskKind::multiclass: {
        std::vector<std::size_t> pred, truth;
        for (std::size_t r = 0; r < positions.size(); ++r) {
            const auto row = logits.row(r);
            pred.push_back(static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin()));
            truth.push_back(task.classes[positions[r]]);
        }
        out["accuracy"] = accuracy(pred, truth);
        out["macro_f1"] = macro_f1(pred, truth, task.num_classes);
        break;
    }
    case TaskKind::survival: {
        std::vector<double> risks;
        std::vector<SurvivalRecord> recs;
        for (std::size_t r = 0; r < positions.size(); ++r) {
            risks.push_back(logits(r, 0));
            recs.push_back(task.survival[positions[r]]);
        }
        out["c_index"] = c_index(risks, recs);
        break;
    }
    }
    return out;
}

struct Trained {
    ad::ParameterSet encoder_params;
    Head head;
    ad::ParameterSet head_params;
};

// Fine-tunes on items at `train` (positions into task.items).
Trained train_on(const TaskData& task, const Encoder& encoder, ad::ParameterSet enc_params, const FinetuneConfig& cfg,
                 std::vector<std::size_t> train, std::size_t index) {
    Head head({.input_dim = encoder.config().hidden_dim,
               .hidden = cfg.head_hidden,
               .outputs = task.outputs(),
               .seed = derive_seed(cfg.seed, 100 + index)});
    ad::ParameterSet head_params = head.init_parameters();
    const ad::AdamWConfig opt{.learning_rate = cfg.learning_rate, .weight_decay = cfg.weight_decay};
    ad::AdamW enc_opt(opt), head_opt(opt);
    Rng rng(derive_seed(cfg.seed, 200 + index));

    // Frozen encoders embed every item once.
    Tensor frozen;
    if (cfg.freeze_encoder) frozen = frozen_features(task, encoder, enc_params);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(train.begin(), train.end(), rng);
        for (std::size_t start = 0; start < train.size(); start += cfg.batch_size) {
            const std::span<const std::size_t> batch(train.data() + start,
                                                     std::min(cfg.batch_size, train.size() - start));
            ad::Tape tape;
            auto enc_bound = ad::bind(tape, enc_params, !cfg.freeze_encoder);
            auto head_bound = ad::bind(tape, head_params);
            Var x = cfg.freeze_encoder ? ad::gather_rows(tape.constant(frozen), batch)
                                       : item_features(tape, enc_bound, encoder, task, batch);
            auto loss = task_loss(head.forward(x, head_bound), task, batch);
            if (!loss) continue;
            if (!std::isfinite(loss->value().item())) {
                throw NumericError("non-finite fine-tuning loss in split " + std::to_string(index) + ", epoch " +
                                   std::to_string(epoch));
            }
            tape.backward(*loss);
            head_opt.step(head_params, ad::gradients(tape, head_bound));
            if (!cfg.freeze_encoder) enc_opt.step(enc_params, ad::gradients(tape, enc_bound));
        }
    }
    return {std::move(enc_params), std::move(head), std::move(head_params)};
}

std::map<std::string, double> run_split(const TaskData& task, const Encoder& encoder, const ad::ParameterSet& start,
                                        const FinetuneConfig& cfg, const Split& split, std::size_t index) {
    Trained t = train_on(task, encoder, start, cfg, split.train, index);
    ad::Tape tape;
    auto enc_bound = ad::bind(tape, t.encoder_params, false);
    auto head_bound = ad::bind(tape, t.head_params, false);
    const Tensor logits =
        t.head.forward(item_features(tape, enc_bound, encoder, task, split.test), head_bound).value();
    return score(logits, task, split.test, cfg.threshold);
}

} // namespace

CvResult cross_validate(const TaskData& task, const EncoderConfig& encoder_cfg,
                        const std::optional<ad::ParameterSet>& encoder_params, const FinetuneConfig& cfg) {
    cfg.validate();
    if (task.size() == 0) throw ContractError("task '" + task.spec.name + "' has no items");
    Encoder encoder(encoder_cfg);
    const ad::ParameterSet start = encoder_params ? *encoder_params : encoder.init_parameters();

    std::vector<Split> splits;
    if (task.spec.kind == TaskKind::binary) {
        std::vector<int> labels;
        for (const auto& row : task.bits) labels.push_back(row[0]);
        for (std::size_t r = 0; r < cfg.repeats; ++r)
            splits.push_back(undersample_binary(labels, derive_seed(cfg.seed, 300 + r), cfg.test_fraction));
    } else if (task.spec.kind == TaskKind::survival) {
        std::vector<int> events;
        for (const auto& s : task.survival) events.push_back(s.event);
        splits = make_folds(task.size(), cfg.folds, derive_seed(cfg.seed, 0), events);
    } else {
        splits = make_folds(task.size(), cfg.folds, derive_seed(cfg.seed, 0));
    }

    std::map<std::string, std::vector<double>> values;
    for (std::size_t s = 0; s < splits.size(); ++s)
        for (const auto& [name, v] : run_split(task, encoder, start, cfg, splits[s], s)) values[name].push_back(v);

    CvResult r;
    r.spec = task.spec;
    r.items = task.size();
    r.excluded = task.excluded;
    for (auto& [name, v] : values) r.metrics[name] = summarize(std::move(v));
    return r;
}

FinetunedModel finetune(const TaskData& task, const EncoderConfig& encoder_cfg,
                        const std::optional<ad::ParameterSet>& encoder_params, const FinetuneConfig& cfg) {
    cfg.validate();
    if (task.size() == 0) throw ContractError("task '" + task.spec.name + "' has no items");
    Encoder encoder(encoder_cfg);
    std::vector<std::size_t> all(task.size());
    std::iota(all.begin(), all.end(), 0);
    Trained t = train_on(task, encoder, encoder_params ? *encoder_params : encoder.init_parameters(), cfg, all, 0);
    return {encoder_cfg, std::move(t.encoder_params), t.head.config(), std::move(t.head_params)};
}

} // namespace supgcl
