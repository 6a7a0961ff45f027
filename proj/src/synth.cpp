#include "supgcl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "supgcl/dataset.hpp"
#include "supgcl/error.hpp"
#include "supgcl/random.hpp"

namespace supgcl {

namespace fs = std::filesystem;

void SynthSpec::validate() const {
    if (n_genes < 2) throw ContractError("n_genes must be at least 2");
    if (n_patients < 2) throw ContractError("n_patients must be at least 2");
    if (n_knockdown_genes < 1 || n_knockdown_genes > n_genes) {
        throw ContractError("n_knockdown_genes must lie in [1, n_genes]");
    }
    if (n_teachers_per_gene < 1 || teacher_replicates < 1) throw ContractError("teacher counts must be positive");
    if (!(density >= 0.0 && density < 1.0)) throw ContractError("density must lie in [0, 1)");
    if (!(noise > 0.0)) throw ContractError("noise must be positive");
    if (!(weight_min > 0.0 && weight_min <= weight_max)) throw ContractError("need 0 < weight_min <= weight_max");
    if (!(negative_fraction >= 0.0 && negative_fraction <= 1.0)) throw ContractError("negative_fraction must lie in [0, 1]");
    if (!(basal_min <= basal_max)) throw ContractError("need basal_min <= basal_max");
    if (n_subtypes < 2) throw ContractError("n_subtypes must be at least 2");
    if (!(label_noise >= 0.0)) throw ContractError("label_noise must be non-negative");
    if (!(censoring_rate >= 0.0)) throw ContractError("censoring_rate must be non-negative");
}

nlohmann::json to_json(const SynthSpec& s) {
    return {{"n_genes", s.n_genes},
            {"n_patients", s.n_patients},
            {"n_knockdown_genes", s.n_knockdown_genes},
            {"n_teachers_per_gene", s.n_teachers_per_gene},
            {"teacher_replicates", s.teacher_replicates},
            {"density", s.density},
            {"noise", s.noise},
            {"weight_min", s.weight_min},
            {"weight_max", s.weight_max},
            {"negative_fraction", s.negative_fraction},
            {"basal_min", s.basal_min},
            {"basal_max", s.basal_max},
            {"n_subtypes", s.n_subtypes},
            {"label_noise", s.label_noise},
            {"censoring_rate", s.censoring_rate},
            {"seed", s.seed}};
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
    SynthSpec s;
    s.n_genes = j.value("n_genes", s.n_genes);
    s.n_patients = j.value("n_patients", s.n_patients);
    s.n_knockdown_genes = j.value("n_knockdown_genes", s.n_knockdown_genes);
    s.n_teachers_per_gene = j.value("n_teachers_per_gene", s.n_teachers_per_gene);
    s.teacher_replicates = j.value("teacher_replicates", s.teacher_replicates);
    s.density = j.value("density", s.density);
    s.noise = j.value("noise", s.noise);
    s.weight_min = j.value("weight_min", s.weight_min);
    s.weight_max = j.value("weight_max", s.weight_max);
    s.negative_fraction = j.value("negative_fraction", s.negative_fraction);
    s.basal_min = j.value("basal_min", s.basal_min);
    s.basal_max = j.value("basal_max", s.basal_max);
    s.n_subtypes = j.value("n_subtypes", s.n_subtypes);
    s.label_noise = j.value("label_noise", s.label_noise);
    s.censoring_rate = j.value("censoring_rate", s.censoring_rate);
    s.seed = j.value("seed", s.seed);
    s.validate();
    return s;
}

std::vector<std::pair<std::size_t, double>> TruthModel::parents(std::size_t i) const {
    std::vector<std::pair<std::size_t, double>> out;
    for (std::size_t k = 0; k < edges.size(); ++k)
        if (edges[k].dst == i) out.emplace_back(edges[k].src, weights[k]);
    return out;
}

std::vector<std::vector<double>> TruthModel::total_effects() const {
    const std::size_t n = basal.size();
    // Processing genes in topological order, T[a][i] = [a == i] + sum_j w_ij T[a][j].
    std::vector<std::vector<double>> t(n, std::vector<double>(n, 0.0));
    std::vector<std::vector<std::pair<std::size_t, double>>> pa(n);
    for (std::size_t i = 0; i < n; ++i) pa[i] = parents(i);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t i : order) {
            double v = (i == a) ? 1.0 : 0.0;
            for (const auto& [j, w] : pa[i]) v += w * t[a][j];
            t[a][i] = v;
        }
    }
    return t;
}

TruthModel generate_truth(const SynthSpec& spec) {
    spec.validate();
    Rng rng(derive_seed(spec.seed, 100));
    TruthModel m;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < spec.n_genes; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "G%03zu", i);
        names.emplace_back(buf);
    }
    m.vocab = make_vocabulary(std::move(names));
    m.order.resize(spec.n_genes);
    std::iota(m.order.begin(), m.order.end(), 0);
    std::shuffle(m.order.begin(), m.order.end(), rng);

    std::bernoulli_distribution edge(spec.density), negative(spec.negative_fraction);
    std::uniform_real_distribution<double> magnitude(spec.weight_min, spec.weight_max);
    std::uniform_real_distribution<double> basal(spec.basal_min, spec.basal_max);
    std::vector<std::pair<Edge, double>> weighted;
    for (std::size_t p = 0; p < spec.n_genes; ++p) {
        for (std::size_t q = p + 1; q < spec.n_genes; ++q) {
            if (!edge(rng)) continue;
            const double w = magnitude(rng) * (negative(rng) ? -1.0 : 1.0);
            weighted.push_back({{m.order[p], m.order[q]}, w});
        }
    }
    std::sort(weighted.begin(), weighted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [e, w] : weighted) {
        m.edges.push_back(e);
        m.weights.push_back(w);
    }
    m.basal.resize(spec.n_genes);
    for (auto& b : m.basal) b = basal(rng);
    m.noise = spec.noise;
    return m;
}

namespace {

std::vector<double> draw_sample(const TruthModel& truth,
                                const std::vector<std::vector<std::pair<std::size_t, double>>>& pa, Rng& rng,
                                std::optional<std::size_t> clamp) {
    std::normal_distribution<double> eps(0.0, truth.noise);
    std::vector<double> x(truth.basal.size(), 0.0);
    for (std::size_t i : truth.order) {
        // The noise draw happens for every gene so clamping does not shift the stream.
        double v = truth.basal[i] + eps(rng);
        for (const auto& [j, w] : pa[i]) v += w * x[j];
        x[i] = (clamp && *clamp == i) ? 0.0 : v;
    }
    return x;
}

std::vector<std::vector<std::pair<std::size_t, double>>> parent_lists(const TruthModel& truth) {
    std::vector<std::vector<std::pair<std::size_t, double>>> pa(truth.basal.size());
    for (std::size_t i = 0; i < pa.size(); ++i) pa[i] = truth.parents(i);
    return pa;
}

std::string numbered(const std::string& prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04zu", i);
    return prefix + buf;
}

} // namespace

ExpressionMatrix sample_expression(const TruthModel& truth, std::size_t n, Rng& rng,
                                   std::optional<std::size_t> clamp, const std::string& id_prefix) {
    const std::size_t g = truth.basal.size();
    if (clamp && *clamp >= g) throw ValidationError("clamped gene outside the model");
    const auto pa = parent_lists(truth);
    std::vector<double> values(g * n);
    std::vector<std::string> ids;
    for (std::size_t s = 0; s < n; ++s) {
        const auto x = draw_sample(truth, pa, rng, clamp);
        for (std::size_t i = 0; i < g; ++i) values[i * n + s] = x[i];
        ids.push_back(numbered(id_prefix, s));
    }
    return ExpressionMatrix(truth.vocab, std::move(ids), std::move(values));
}

Grn realize_grn(const TruthModel& truth, std::span<const double> x) {
    std::vector<double> ef(truth.edges.size());
    for (std::size_t k = 0; k < ef.size(); ++k) ef[k] = truth.weights[k] * x[truth.edges[k].src];
    return Grn(truth.vocab, truth.edges, std::vector<double>(x.begin(), x.end()), std::move(ef));
}

std::vector<Grn> simulate_knockdown(const TruthModel& truth, std::size_t gene, std::size_t count,
                                    std::size_t replicates, Rng& rng) {
    if (gene >= truth.basal.size()) throw ValidationError("knockdown gene outside the model");
    if (replicates == 0) throw ContractError("teacher_replicates must be positive");
    const auto pa = parent_lists(truth);
    std::vector<Grn> out;
    for (std::size_t t = 0; t < count; ++t) {
        std::vector<double> mean(truth.basal.size(), 0.0);
        for (std::size_t r = 0; r < replicates; ++r) {
            const auto x = draw_sample(truth, pa, rng, gene);
            for (std::size_t i = 0; i < x.size(); ++i) mean[i] += x[i];
        }
        for (double& v : mean) v /= static_cast<double>(replicates);
        out.push_back(realize_grn(truth, mean));
    }
    return out;
}

LabelSet make_labels(const TruthModel& truth, const ExpressionMatrix& expression, const SynthSpec& spec, Rng& rng) {
    const std::size_t n = truth.basal.size();
    if (expression.num_genes() != n) throw ContractError("expression does not match the truth model");
    LabelSet L;
    const auto& names = truth.vocab->names();

    std::vector<std::size_t> indeg(n, 0), outdeg(n, 0), depth(n, 0);
    for (const Edge& e : truth.edges) {
        ++outdeg[e.src];
        ++indeg[e.dst];
    }
    for (std::size_t i : truth.order)
        for (const auto& [j, w] : truth.parents(i)) depth[i] = std::max(depth[i], depth[j] + 1);

    L.bp.columns = {"sink", "root", "hub"};
    L.cc.columns = {"depth0", "depth1", "depth2", "depth3plus"};
    L.rel.columns = {"relevant"};
    const auto effects = truth.total_effects();
    std::vector<double> impact(n, 0.0);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t i = 0; i < n; ++i)
            if (i != a) impact[a] += std::abs(effects[a][i]);
    std::vector<double> sorted = impact;
    std::sort(sorted.begin(), sorted.end());
    const double cut = sorted[static_cast<std::size_t>(std::floor(0.7 * static_cast<double>(n - 1)))];
    for (std::size_t i = 0; i < n; ++i) {
        L.bp.ids.push_back(names[i]);
        L.bp.bits.push_back({outdeg[i] == 0, indeg[i] == 0, outdeg[i] >= 2});
        L.cc.ids.push_back(names[i]);
        std::vector<int> band(4, 0);
        band[std::min<std::size_t>(depth[i], 3)] = 1;
        L.cc.bits.push_back(band);
        L.rel.ids.push_back(names[i]);
        L.rel.bits.push_back({impact[i] > cut && impact[i] > 0.0});
    }

    // Patient labels from standardized expression.
    const std::size_t m = expression.num_samples();
    std::vector<double> mu(n, 0.0), sd(n, 0.0);
    for (std::size_t g = 0; g < n; ++g) {
        auto row = expression.gene(g);
        mu[g] = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(m);
        for (double v : row) sd[g] += (v - mu[g]) * (v - mu[g]);
        sd[g] = std::sqrt(sd[g] / static_cast<double>(m));
        if (sd[g] == 0.0) sd[g] = 1.0;
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<double>> directions(spec.n_subtypes, std::vector<double>(n));
    for (auto& d : directions)
        for (auto& v : d) v = normal(rng);
    std::vector<double> beta(n);
    for (auto& b : beta) b = normal(rng) / std::sqrt(static_cast<double>(n));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::exponential_distribution<double> censor(spec.censoring_rate > 0.0 ? spec.censoring_rate : 1.0);

    for (std::size_t s = 0; s < m; ++s) {
        std::vector<double> z(n);
        for (std::size_t g = 0; g < n; ++g) z[g] = (expression(g, s) - mu[g]) / sd[g];
        std::size_t best = 0;
        double best_score = -INFINITY;
        for (std::size_t c = 0; c < spec.n_subtypes; ++c) {
            const double gumbel = -std::log(-std::log(std::max(unit(rng), 1e-300)));
            const double score = std::inner_product(z.begin(), z.end(), directions[c].begin(), 0.0) /
                                     std::sqrt(static_cast<double>(n)) +
                                 spec.label_noise * gumbel;
            if (score > best_score) {
                best_score = score;
                best = c;
            }
        }
        L.subtype.ids.push_back(expression.sample_ids()[s]);
        L.subtype.classes.push_back(best);

        const double risk = std::inner_product(z.begin(), z.end(), beta.begin(), 0.0);
        std::exponential_distribution<double> hazard(0.1 * std::exp(risk));
        const double event_time = hazard(rng);
        const double censor_time = spec.censoring_rate > 0.0 ? censor(rng) : INFINITY;
        SurvivalRecord rec;
        rec.time = std::max(std::min(event_time, censor_time), 1e-6);
        rec.event = event_time <= censor_time ? 1 : 0;
        L.survival.ids.push_back(expression.sample_ids()[s]);
        L.survival.records.push_back(rec);
    }
    return L;
}

SynthDataset generate_dataset(const SynthSpec& spec) {
    spec.validate();
    SynthDataset d;
    d.spec = spec;
    d.truth = generate_truth(spec);

    Rng expr_rng(derive_seed(spec.seed, 101));
    d.expression = sample_expression(d.truth, spec.n_patients, expr_rng, std::nullopt, "P");
    for (std::size_t s = 0; s < spec.n_patients; ++s) d.patients.push_back(realize_grn(d.truth, d.expression.sample(s)));

    Rng kd_rng(derive_seed(spec.seed, 102));
    std::vector<std::size_t> genes(spec.n_genes);
    std::iota(genes.begin(), genes.end(), 0);
    std::shuffle(genes.begin(), genes.end(), kd_rng);
    genes.resize(spec.n_knockdown_genes);
    std::sort(genes.begin(), genes.end());
    std::map<std::size_t, std::vector<Grn>> teachers;
    for (std::size_t g : genes)
        teachers[g] = simulate_knockdown(d.truth, g, spec.n_teachers_per_gene, spec.teacher_replicates, kd_rng);
    d.bank = TeacherBank(d.truth.vocab, std::move(teachers));

    std::vector<double> nf(spec.n_genes, 0.0), ef(d.truth.edges.size(), 0.0);
    for (const Grn& p : d.patients) {
        for (std::size_t i = 0; i < nf.size(); ++i) nf[i] += p.node_features()[i];
        for (std::size_t k = 0; k < ef.size(); ++k) ef[k] += p.edge_features()[k];
    }
    for (double& v : nf) v /= static_cast<double>(spec.n_patients);
    for (double& v : ef) v /= static_cast<double>(spec.n_patients);
    d.reference = Grn(d.truth.vocab, d.truth.edges, nf, ef);

    Rng label_rng(derive_seed(spec.seed, 103));
    d.labels = make_labels(d.truth, d.expression, spec, label_rng);
    return d;
}

void write_dataset(const SynthDataset& d, const fs::path& dir) {
    fs::create_directories(dir / "labels");
    write_patients(d.expression.sample_ids(), d.patients, dir);
    save_teacher_bank(d.bank, dir);
    save_grn(d.reference, dir / "reference.json");
    write_expression_tsv(d.expression, dir / "expression.tsv");
    write_bit_table(d.labels.bp, dir / "labels/bp.tsv");
    write_bit_table(d.labels.cc, dir / "labels/cc.tsv");
    write_bit_table(d.labels.rel, dir / "labels/rel.tsv");
    write_class_table(d.labels.subtype, dir / "labels/subtype.tsv");
    write_survival_table(d.labels.survival, dir / "labels/survival.tsv");

    nlohmann::json truth_edges = nlohmann::json::array();
    for (std::size_t k = 0; k < d.truth.edges.size(); ++k) {
        truth_edges.push_back({{"src", d.truth.vocab->name(d.truth.edges[k].src)},
                               {"dst", d.truth.vocab->name(d.truth.edges[k].dst)},
                               {"weight", d.truth.weights[k]}});
    }
    std::ofstream(dir / "truth.json", std::ios::binary)
        << nlohmann::json{{"vocab", d.truth.vocab->names()},
                          {"edges", truth_edges},
                          {"basal", d.truth.basal},
                          {"noise", d.truth.noise}}
               .dump(1)
        << '\n';

    const nlohmann::json manifest = {
        {"format", "supgcl-dataset"},
        {"version", 1},
        {"patients", "patients.json"},
        {"teachers", "teachers.json"},
        {"reference", "reference.json"},
        {"expression", "expression.tsv"},
        {"truth", "truth.json"},
        {"synth", to_json(d.spec)},
        {"labels",
         {{"bp", "labels/bp.tsv"},
          {"cc", "labels/cc.tsv"},
          {"rel", "labels/rel.tsv"},
          {"subtype", "labels/subtype.tsv"},
          {"survival", "labels/survival.tsv"}}}};
    std::ofstream out(dir / "dataset.json", std::ios::binary);
    if (!out) throw Error("cannot write dataset manifest in " + dir.string());
    out << manifest.dump(1) << '\n';
}

} // namespace supgcl
