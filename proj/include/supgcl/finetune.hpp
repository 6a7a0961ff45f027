#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "supgcl/dataset.hpp"
#include "supgcl/encoder.hpp"
#include "supgcl/heads.hpp"
#include "supgcl/labels.hpp"
#include "supgcl/metrics.hpp"

namespace supgcl {

enum class TaskLevel { node, graph };
enum class TaskKind { multilabel, binary, multiclass, survival };

struct TaskSpec {
    std::string name;
    TaskLevel level = TaskLevel::node;
    TaskKind kind = TaskKind::multilabel;
};

/// Built-in tasks: bp, cc (node, multi-label), rel (node, binary),
/// subtype (graph, multi-class), survival (graph, Cox).
TaskSpec task_spec(const std::string& name);
const char* to_string(TaskLevel level);
const char* to_string(TaskKind kind);

/// Labeled items of one task. Node tasks classify nodes of `graphs[0]`
/// (items are node indices); graph tasks classify whole graphs (items are
/// positions in `graphs`).
struct TaskData {
    TaskSpec spec;
    std::vector<Grn> graphs;
    std::vector<std::size_t> items;
    /// multilabel / binary: one 0/1 row per item.
    BitMatrix bits;
    /// multiclass: class per item.
    std::vector<std::size_t> classes;
    std::size_t num_classes = 0;
    /// survival: record per item.
    std::vector<SurvivalRecord> survival;
    /// Genes or patients present in the graphs but absent from the label file.
    std::size_t excluded = 0;

    std::size_t size() const { return items.size(); }
    std::size_t outputs() const;
};

/// Node task on `reference`; label rows are matched to genes by name and
/// unlabeled genes are excluded. Unknown gene names raise ContractError.
TaskData node_task(const TaskSpec& spec, const Grn& reference, const BitTable& labels);
TaskData graph_task(const TaskSpec& spec, std::span<const Grn> graphs, std::span<const std::string> ids,
                    const ClassTable& labels);
TaskData graph_task(const TaskSpec& spec, std::span<const Grn> graphs, std::span<const std::string> ids,
                    const SurvivalTable& labels);
/// Reads the task's label file listed in the dataset manifest.
TaskData assemble_task(const Dataset& dataset, const std::string& name);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// k-fold partition of 0..n-1 after a seeded shuffle; test sets are disjoint
/// and cover every index. With `strata`, each stratum is dealt round-robin so
/// every fold receives a share of each stratum.
std::vector<Split> make_folds(std::size_t n, std::size_t folds, std::uint64_t seed,
                              std::span<const int> strata = {});

/// Keeps every positive, samples as many negatives without replacement, then
/// splits the balanced set into train/test with `test_fraction` per class.
/// Throws ContractError when either class is empty.
Split undersample_binary(std::span<const int> labels, std::uint64_t seed, double test_fraction = 0.2);

struct FinetuneConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 8;
    double learning_rate = 1e-3;
    double weight_decay = 0.0;
    /// Hidden width of the head; 0 gives a linear head.
    std::size_t head_hidden = 64;
    std::size_t folds = 10;
    /// Undersampling repeats used in place of folds for binary tasks.
    std::size_t repeats = 10;
    double test_fraction = 0.2;
    bool freeze_encoder = false;
    double threshold = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
};

nlohmann::json to_json(const FinetuneConfig& cfg);

struct MetricSummary {
    std::vector<double> values;
    double mean = 0.0;
    /// Population standard deviation over folds.
    double std = 0.0;
};

struct CvResult {
    TaskSpec spec;
    std::size_t items = 0;
    std::size_t excluded = 0;
    std::map<std::string, MetricSummary> metrics;
};

nlohmann::json to_json(const CvResult& r);

/// Per split: start from `encoder_params` (fresh encoder parameters when
/// absent), fine-tune encoder and head with AdamW on the training items, then
/// score the held-out items. Binary tasks use undersampling repeats; survival
/// folds are stratified on the event flag.
CvResult cross_validate(const TaskData& task, const EncoderConfig& encoder,
                        const std::optional<ad::ParameterSet>& encoder_params, const FinetuneConfig& cfg);

struct FinetunedModel {
    EncoderConfig encoder;
    ad::ParameterSet encoder_params;
    HeadConfig head;
    ad::ParameterSet head_params;
};

/// Fine-tunes on every item of the task, as one split of cross_validate.
FinetunedModel finetune(const TaskData& task, const EncoderConfig& encoder,
                        const std::optional<ad::ParameterSet>& encoder_params, const FinetuneConfig& cfg);

MetricSummary summarize(std::vector<double> values);

} // namespace supgcl
