#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "supgcl/expression.hpp"
#include "supgcl/grn.hpp"
#include "supgcl/labels.hpp"

namespace supgcl {

struct SynthSpec {
    std::size_t n_genes = 30;
    std::size_t n_patients = 200;
    /// Size of the knockdown set K.
    std::size_t n_knockdown_genes = 8;
    std::size_t n_teachers_per_gene = 2;
    /// Knockdown samples averaged into one teacher.
    std::size_t teacher_replicates = 10;
    /// Probability of an edge between each ordered pair in topological order.
    double density = 0.1;
    /// Standard deviation of the additive noise.
    double noise = 0.3;
    double weight_min = 0.5;
    double weight_max = 1.2;
    double negative_fraction = 0.2;
    double basal_min = 0.5;
    double basal_max = 1.5;
    std::size_t n_subtypes = 5;
    /// Scale of the Gumbel noise added to subtype scores.
    double label_noise = 0.5;
    /// Rate of the exponential censoring time.
    double censoring_rate = 0.05;
    std::uint64_t seed = 0;

    void validate() const;
};

nlohmann::json to_json(const SynthSpec& s);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

/// Linear-Gaussian structural equation model over a DAG:
///   x_i = basal_i + sum_{j in pa(i)} w_ij x_j + eps_i,  eps_i ~ N(0, noise^2).
struct TruthModel {
    VocabularyRef vocab;
    /// Genes in topological order.
    std::vector<std::size_t> order;
    /// Sorted by (src, dst); weights[k] belongs to edges[k].
    std::vector<Edge> edges;
    std::vector<double> weights;
    std::vector<double> basal;
    double noise = 1.0;

    /// (parent, weight) pairs of gene i.
    std::vector<std::pair<std::size_t, double>> parents(std::size_t i) const;
    /// Matrix of total effects T[a][i] = d E[x_i] / d x_a (path sums).
    std::vector<std::vector<double>> total_effects() const;
};

TruthModel generate_truth(const SynthSpec& spec);

/// Ancestral sampling of n samples. With `clamp`, that gene is fixed at 0
/// and its descendants see the suppressed value.
ExpressionMatrix sample_expression(const TruthModel& truth, std::size_t n, Rng& rng,
                                   std::optional<std::size_t> clamp = std::nullopt,
                                   const std::string& id_prefix = "s");

/// GRN on the truth topology with node features x and edge j -> i carrying w_ij x_j.
Grn realize_grn(const TruthModel& truth, std::span<const double> x);

/// `count` teachers for knockdown of `gene`, each built from the mean of
/// `replicates` clamped samples.
std::vector<Grn> simulate_knockdown(const TruthModel& truth, std::size_t gene, std::size_t count,
                                    std::size_t replicates, Rng& rng);

struct LabelSet {
    /// Bits: sink (out-degree 0), root (in-degree 0), hub (out-degree >= 2).
    BitTable bp;
    /// One-hot depth band: longest path from a root of 0, 1, 2, >= 3.
    BitTable cc;
    /// 1 when the summed absolute total effect on other genes is in the top 30%.
    BitTable rel;
    ClassTable subtype;
    SurvivalTable survival;
};

/// Node labels from structural roles of `truth`; patient labels from noisy
/// linear functionals of standardized expression.
LabelSet make_labels(const TruthModel& truth, const ExpressionMatrix& expression, const SynthSpec& spec, Rng& rng);

struct SynthDataset {
    SynthSpec spec;
    TruthModel truth;
    ExpressionMatrix expression;
    std::vector<Grn> patients;
    TeacherBank bank;
    /// Truth topology with mean patient node and edge features.
    Grn reference;
    LabelSet labels;
};

SynthDataset generate_dataset(const SynthSpec& spec);

/// Writes dataset.json plus the files it names (see load_dataset).
void write_dataset(const SynthDataset& d, const std::filesystem::path& dir);

} // namespace supgcl
