#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "manifest.hpp"
#include "supgcl/bayesnet.hpp"
#include "supgcl/config.hpp"
#include "supgcl/dataset.hpp"
#include "supgcl/error.hpp"
#include "supgcl/expression.hpp"
#include "supgcl/finetune.hpp"
#include "supgcl/pretrain.hpp"
#include "supgcl/synth.hpp"
#include "supgcl/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace supgcl::cli {
namespace {

enum Exit : int {
    kOk = 0,
    kOther = 1,
    kConfig = 2,
    kMissingInput = 3,
    kParse = 4,
    kVerification = 5,
    kNumeric = 6,
};

constexpr const char* kDataRootEnv = "SUPGCL_DATA_ROOT";

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::size_t threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool out_required) {
    cmd->add_option("--config", o.config, "Run configuration file (INI)");
    cmd->add_option("--seed", o.seed, "Seed for every stochastic component; overrides the config");
    auto* out = cmd->add_option("--out", o.out, "Output directory");
    if (out_required) out->required();
    cmd->add_option("--threads", o.threads, "Worker threads where a step supports them");
}

struct Context {
    RunConfig config;
    RunManifest manifest;
    fs::path out;
};

Context make_context(const std::string& command, const CommonOptions& o, const std::vector<std::string>& argv) {
    Context c;
    c.manifest.started_at = utc_now();
    c.manifest.command = command;
    c.manifest.argv = argv;
    if (!o.config.empty()) {
        c.config = load_run_config(o.config);
        c.manifest.config_path = o.config;
        c.manifest.add_input("config", o.config);
    }
    if (o.seed) c.config.apply_seed(*o.seed);
    if (o.threads > 0) c.config.threads = o.threads;
    c.config.estimate.threads = c.config.threads;
    c.config.validate();
    c.manifest.seed = c.config.seed;
    c.manifest.config = to_json(c.config);
    c.out = o.out;
    return c;
}

// --data, else the data root from the environment; relative paths resolve
// against that root when it is set.
fs::path resolve_data(const std::string& data) {
    const char* root = std::getenv(kDataRootEnv);
    if (data.empty()) {
        if (!root || !*root) throw MissingInputError(std::string("no --data given and ") + kDataRootEnv + " is unset");
        return root;
    }
    fs::path p(data);
    if (p.is_relative() && root && *root && !fs::exists(p)) p = fs::path(root) / p;
    return p;
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(1) << '\n';
}

EncoderConfig encoder_for(const RunConfig& cfg, const Dataset& data) {
    EncoderConfig e = cfg.pretrain.encoder;
    e.num_genes = data.vocab->size();
    return e;
}

// Parameters and encoder configuration from a checkpoint written by pretrain.
std::pair<ad::ParameterSet, EncoderConfig> load_encoder_checkpoint(const fs::path& path, const Dataset& data) {
    if (!fs::exists(path)) throw MissingInputError("checkpoint not found: " + path.string());
    json meta;
    ad::ParameterSet params = ad::load_checkpoint(path, &meta);
    if (!meta.contains("encoder")) throw ParseError(path.string() + ": checkpoint metadata lacks an encoder entry");
    EncoderConfig enc = encoder_config_from_json(meta["encoder"]);
    if (enc.num_genes != data.vocab->size()) {
        throw ContractError("checkpoint encoder expects " + std::to_string(enc.num_genes) + " genes, dataset has " +
                            std::to_string(data.vocab->size()));
    }
    return {std::move(params), enc};
}

int cmd_synth(Context& c) {
    const SynthDataset d = generate_dataset(c.config.synth);
    write_dataset(d, c.out);
    c.manifest.notes = {{"genes", d.truth.vocab->size()},
                        {"patients", d.patients.size()},
                        {"truth_edges", d.truth.edges.size()},
                        {"knockdown_genes", d.bank.size()}};
    c.manifest.write(c.out);
    std::cout << "synth: wrote " << d.patients.size() << " patient graphs to " << c.out.string() << '\n';
    return kOk;
}

// Knockdown manifest TSV: header "gene<TAB>expression", one experiment per row,
// paths relative to the manifest.
std::vector<std::pair<std::string, fs::path>> read_knockdown_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("knockdown manifest not found: " + path.string());
    std::vector<std::pair<std::string, fs::path>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1 || line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected gene<TAB>expression path");
        }
        rows.emplace_back(line.substr(0, tab), path.parent_path() / line.substr(tab + 1));
    }
    if (rows.empty()) throw ParseError(path.string() + ": no knockdown experiments listed");
    return rows;
}

int cmd_estimate(Context& c, const std::string& expression_path, const std::string& knockdowns) {
    if (!fs::exists(expression_path)) throw MissingInputError("expression file not found: " + expression_path);
    const ExpressionMatrix expr = read_expression_tsv(expression_path);
    c.manifest.add_input("expression", expression_path);

    std::vector<std::pair<std::string, ExpressionMatrix>> experiments;
    if (!knockdowns.empty()) {
        c.manifest.add_input("knockdowns", knockdowns);
        for (const auto& [gene, path] : read_knockdown_manifest(knockdowns)) {
            if (!fs::exists(path)) throw MissingInputError("knockdown expression not found: " + path.string());
            const ExpressionMatrix kd = read_expression_tsv(path);
            if (kd.vocab()->names() != expr.vocab()->names()) {
                throw ContractError(path.string() + ": gene rows differ from the patient expression matrix");
            }
            if (!expr.vocab()->find(gene)) throw ContractError("knockdown gene " + gene + " is not in the vocabulary");
            std::vector<double> values;
            for (std::size_t g = 0; g < kd.num_genes(); ++g) values.insert(values.end(), kd.gene(g).begin(), kd.gene(g).end());
            experiments.emplace_back(gene, ExpressionMatrix(expr.vocab(), kd.sample_ids(), std::move(values)));
            c.manifest.add_input("knockdown:" + gene, path);
        }
    }

    const BootstrapResult boot = bootstrap_structure(expr, c.config.estimate);
    std::size_t clamped = 0;
    const std::vector<Grn> patients = derive_sample_grns(boot.network, expr, &clamped);
    const Grn reference = derive_sample_grns(boot.network, mean_profile(expr)).front();

    fs::create_directories(c.out);
    write_patients(expr.sample_ids(), patients, c.out);
    save_grn(reference, c.out / "reference.json");
    write_expression_tsv(expr, c.out / "expression.tsv");
    write_json(to_json(boot.network), c.out / "network.json");
    write_json(frequencies_to_json(boot, *expr.vocab(), c.config.estimate), c.out / "edge_frequencies.json");

    json manifest = {{"format", "supgcl-dataset"},
                     {"version", 1},
                     {"patients", "patients.json"},
                     {"reference", "reference.json"},
                     {"expression", "expression.tsv"},
                     {"labels", json::object()}};
    std::size_t teacher_count = 0;
    if (!experiments.empty()) {
        std::map<std::size_t, std::vector<Grn>> entries;
        for (const auto& [gene, kd] : experiments) {
            entries[expr.vocab()->index_of(gene)].push_back(
                derive_sample_grns(boot.network, mean_profile(kd), &clamped).front());
            ++teacher_count;
        }
        save_teacher_bank(TeacherBank(expr.vocab(), std::move(entries)), c.out);
        manifest["teachers"] = "teachers.json";
    }
    write_json(manifest, c.out / "dataset.json");
    c.manifest.notes = {{"edges", boot.edges.size()},
                        {"bootstrap_runs", c.config.estimate.runs},
                        {"teachers", teacher_count},
                        {"clamped_spline_evaluations", clamped}};
    c.manifest.write(c.out);
    std::cout << "estimate: " << boot.edges.size() << " edges, " << patients.size() << " sample GRNs, " << teacher_count
              << " teachers\n";
    return kOk;
}

int cmd_pretrain(Context& c, const std::string& data_arg) {
    const fs::path data_path = resolve_data(data_arg);
    const Dataset data = load_dataset(data_path, true);
    c.manifest.add_input("data", data.root);

    fs::create_directories(c.out);
    const fs::path ckpt = c.out / "checkpoint.json";
    fs::remove(ckpt);
    std::ofstream log(c.out / "train_log.jsonl", std::ios::binary);
    TrainResult r;
    try {
        r = pretrain(data.patients, *data.bank, c.config.pretrain, &log);
    } catch (const std::exception& e) {
        log << json{{"type", "error"}, {"message", e.what()}}.dump() << '\n';
        throw;
    }
    log.close();

    EncoderConfig enc = encoder_for(c.config, data);
    const json meta = {{"encoder", to_json(enc)},
                       {"train", to_json(c.config.pretrain)},
                       {"vocab", data.vocab->names()},
                       {"best_epoch", r.best_epoch},
                       {"best_validation_loss", r.best_validation_loss}};
    json history = json::array();
    for (const auto& e : r.epochs) history.push_back(to_json(e));
    write_json({{"epochs", history},
                {"best_epoch", r.best_epoch},
                {"best_validation_loss", r.best_validation_loss},
                {"train_indices", r.train_indices},
                {"validation_indices", r.validation_indices}},
               c.out / "history.json");
    const fs::path tmp = c.out / "checkpoint.json.tmp";
    ad::save_checkpoint(r.params, meta, tmp);
    fs::rename(tmp, ckpt);
    c.manifest.write(c.out);
    std::cout << "pretrain: best validation loss " << r.best_validation_loss << " at epoch " << r.best_epoch << '\n';
    return kOk;
}

int cmd_embed(Context& c, const std::string& data_arg, const std::string& checkpoint) {
    const Dataset data = load_dataset(resolve_data(data_arg), false);
    auto [params, enc] = load_encoder_checkpoint(checkpoint, data);
    c.manifest.add_input("data", data.root);
    c.manifest.add_input("checkpoint", checkpoint);
    const auto records = embed_dataset(data.patients, Encoder(enc), params);

    fs::create_directories(c.out);
    write_embeddings(records, c.out / "embeddings.json");
    std::ofstream csv(c.out / "pooled.csv", std::ios::binary);
    csv << "patient";
    for (std::size_t j = 0; j < enc.hidden_dim; ++j) csv << ",z" << j;
    csv << '\n';
    for (std::size_t i = 0; i < records.size(); ++i) {
        csv << data.patient_ids[i];
        for (double v : records[i].pooled) csv << ',' << json(v).dump();
        csv << '\n';
    }
    csv.close();
    c.manifest.write(c.out);
    std::cout << "embed: " << records.size() << " patients, d = " << enc.hidden_dim << '\n';
    return kOk;
}

// Encoder start point: the checkpoint when given, else fresh parameters.
std::pair<std::optional<ad::ParameterSet>, EncoderConfig> encoder_start(Context& c, const Dataset& data,
                                                                       const std::string& checkpoint) {
    if (checkpoint.empty()) return {std::nullopt, encoder_for(c.config, data)};
    auto [params, enc] = load_encoder_checkpoint(checkpoint, data);
    c.manifest.add_input("checkpoint", checkpoint);
    return {std::move(params), enc};
}

int cmd_finetune(Context& c, const std::string& data_arg, const std::string& checkpoint, const std::string& task_name) {
    const Dataset data = load_dataset(resolve_data(data_arg), false);
    c.manifest.add_input("data", data.root);
    auto [start, enc] = encoder_start(c, data, checkpoint);
    const TaskData task = assemble_task(data, task_name);
    const FinetunedModel m = finetune(task, enc, start, c.config.finetune);

    ad::ParameterSet all;
    all.append(m.encoder_params, "encoder.");
    all.append(m.head_params, "head.");
    const json meta = {{"encoder", to_json(m.encoder)},
                       {"head",
                        {{"input_dim", m.head.input_dim},
                         {"hidden", m.head.hidden},
                         {"outputs", m.head.outputs},
                         {"seed", m.head.seed}}},
                       {"task", task.spec.name},
                       {"finetune", to_json(c.config.finetune)},
                       {"items", task.size()},
                       {"excluded", task.excluded}};
    fs::create_directories(c.out);
    const fs::path tmp = c.out / "finetuned.json.tmp";
    ad::save_checkpoint(all, meta, tmp);
    fs::rename(tmp, c.out / "finetuned.json");
    c.manifest.write(c.out);
    std::cout << "finetune: " << task.spec.name << " on " << task.size() << " items\n";
    return kOk;
}

int cmd_evaluate(Context& c, const std::string& data_arg, const std::string& checkpoint,
                 std::vector<std::string> tasks) {
    const Dataset data = load_dataset(resolve_data(data_arg), false);
    c.manifest.add_input("data", data.root);
    auto [start, enc] = encoder_start(c, data, checkpoint);
    if (tasks.empty()) tasks = c.config.tasks;

    json results = json::array();
    std::ostringstream csv;
    csv << "task,metric,mean,std\n";
    for (const auto& name : tasks) {
        const CvResult r = cross_validate(assemble_task(data, name), enc, start, c.config.finetune);
        results.push_back(to_json(r));
        for (const auto& [metric, s] : r.metrics) {
            csv << name << ',' << metric << ',' << json(s.mean).dump() << ',' << json(s.std).dump() << '\n';
            std::cout << name << ' ' << metric << ' ' << s.mean << " +- " << s.std << '\n';
        }
    }
    fs::create_directories(c.out);
    write_json({{"checkpoint_sha256", checkpoint.empty() ? json(nullptr) : json(sha256_file(checkpoint))},
                {"finetune", to_json(c.config.finetune)},
                {"results", results}},
               c.out / "evaluation.json");
    std::ofstream(c.out / "evaluation.csv", std::ios::binary) << csv.str();
    c.manifest.write(c.out);
    return kOk;
}

int cmd_verify(Context& c) {
    const auto checks = run_identity_checks(c.config.seed);
    bool ok = true;
    json j = json::array();
    for (const auto& r : checks) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " value=" << r.value << " tol=" << r.tolerance;
        if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
        std::cout << '\n';
        ok = ok && r.passed;
        j.push_back(to_json(r));
    }
    if (!c.out.empty()) {
        fs::create_directories(c.out);
        write_json({{"passed", ok}, {"checks", j}}, c.out / "verify.json");
        c.manifest.write(c.out);
    }
    if (!ok) {
        std::cerr << json{{"type", "error"}, {"kind", "verification"}, {"message", "identity checks failed"},
                          {"exit_code", kVerification}}
                         .dump()
                  << '\n';
        return kVerification;
    }
    return kOk;
}

int cmd_sweep(Context& c, const std::string& data_arg) {
    const Dataset data = load_dataset(resolve_data(data_arg), true);
    c.manifest.add_input("data", data.root);
    json runs = json::array();
    std::optional<std::size_t> best;
    double best_loss = 0.0;
    ad::ParameterSet best_params;
    json best_meta;
    for (double lr : c.config.sweep.learning_rates) {
        for (std::size_t bs : c.config.sweep.batch_sizes) {
            for (double tau : c.config.sweep.taus) {
                TrainConfig tc = c.config.pretrain;
                tc.learning_rate = lr;
                tc.batch_size = bs;
                tc.loss.tau_node = tau;
                tc.loss.tau_aug = tau;
                const TrainResult r = pretrain(data.patients, *data.bank, tc);
                runs.push_back({{"learning_rate", lr},
                                {"batch_size", bs},
                                {"tau", tau},
                                {"best_epoch", r.best_epoch},
                                {"best_validation_loss", r.best_validation_loss}});
                std::cout << "sweep: lr=" << lr << " batch=" << bs << " tau=" << tau
                          << " validation=" << r.best_validation_loss << '\n';
                if (!best || r.best_validation_loss < best_loss) {
                    best = runs.size() - 1;
                    best_loss = r.best_validation_loss;
                    best_params = r.params;
                    EncoderConfig enc = encoder_for(c.config, data);
                    best_meta = {{"encoder", to_json(enc)}, {"train", to_json(tc)}, {"vocab", data.vocab->names()}};
                }
            }
        }
    }
    fs::create_directories(c.out);
    write_json({{"runs", runs}, {"best", *best}, {"selection", "lowest best_validation_loss"}}, c.out / "sweep.json");
    const fs::path tmp = c.out / "best_checkpoint.json.tmp";
    ad::save_checkpoint(best_params, best_meta, tmp);
    fs::rename(tmp, c.out / "best_checkpoint.json");
    c.manifest.write(c.out);
    return kOk;
}

int report(const std::string& kind, const std::string& message, int code) {
    std::cerr << json{{"type", "error"}, {"kind", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
    return code;
}

} // namespace
} // namespace supgcl::cli

int main(int argc, char** argv) {
    using namespace supgcl;
    using namespace supgcl::cli;

    CLI::App app{"Supervised graph contrastive pretraining for gene regulatory networks"};
    app.require_subcommand(1);
    const std::vector<std::string> args(argv, argv + argc);

    CommonOptions synth_o, est_o, pre_o, emb_o, ft_o, ev_o, ver_o, sw_o;
    std::string expression, knockdowns, data, checkpoint, task;
    std::vector<std::string> tasks;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with ground truth and labels");
    add_common(synth, synth_o, true);

    auto* estimate = app.add_subcommand("estimate", "Estimate a B-spline Bayesian network and per-sample GRNs");
    add_common(estimate, est_o, true);
    estimate->add_option("--expression", expression, "Genes x samples expression TSV")->required();
    estimate->add_option("--knockdowns", knockdowns, "TSV of gene<TAB>expression path, one knockdown experiment per row");

    auto* pre = app.add_subcommand("pretrain", "Pretrain the encoder");
    add_common(pre, pre_o, true);
    pre->add_option("--data", data, "Dataset directory or dataset.json");

    auto* embed = app.add_subcommand("embed", "Export patient embeddings");
    add_common(embed, emb_o, true);
    embed->add_option("--data", data, "Dataset directory or dataset.json");
    embed->add_option("--checkpoint", checkpoint, "Encoder checkpoint")->required();

    auto* ft = app.add_subcommand("finetune", "Fine-tune encoder and head on every labeled item of a task");
    add_common(ft, ft_o, true);
    ft->add_option("--data", data, "Dataset directory or dataset.json");
    ft->add_option("--checkpoint", checkpoint, "Encoder checkpoint; fresh parameters when omitted");
    ft->add_option("--task", task, "bp, cc, rel, subtype or survival")->required();

    auto* ev = app.add_subcommand("evaluate", "Cross-validated downstream evaluation");
    add_common(ev, ev_o, true);
    ev->add_option("--data", data, "Dataset directory or dataset.json");
    ev->add_option("--checkpoint", checkpoint, "Encoder checkpoint; fresh parameters when omitted");
    ev->add_option("--task", tasks, "Task to evaluate (repeatable); defaults to the configured list");

    auto* ver = app.add_subcommand("verify", "Check loss identities and structural invariants");
    add_common(ver, ver_o, false);

    auto* sw = app.add_subcommand("sweep", "Grid search over learning rate, batch size and temperature");
    add_common(sw, sw_o, true);
    sw->add_option("--data", data, "Dataset directory or dataset.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report("usage", e.what(), kConfig);
    }

    try {
        if (synth->parsed()) {
            Context c = make_context("synth", synth_o, args);
            return cmd_synth(c);
        }
        if (estimate->parsed()) {
            Context c = make_context("estimate", est_o, args);
            return cmd_estimate(c, expression, knockdowns);
        }
        if (pre->parsed()) {
            Context c = make_context("pretrain", pre_o, args);
            return cmd_pretrain(c, data);
        }
        if (embed->parsed()) {
            Context c = make_context("embed", emb_o, args);
            return cmd_embed(c, data, checkpoint);
        }
        if (ft->parsed()) {
            Context c = make_context("finetune", ft_o, args);
            return cmd_finetune(c, data, checkpoint, task);
        }
        if (ev->parsed()) {
            Context c = make_context("evaluate", ev_o, args);
            return cmd_evaluate(c, data, checkpoint, tasks);
        }
        if (ver->parsed()) {
            Context c = make_context("verify", ver_o, args);
            return cmd_verify(c);
        }
        if (sw->parsed()) {
            Context c = make_context("sweep", sw_o, args);
            return cmd_sweep(c, data);
        }
    } catch (const ConfigError& e) {
        return report("config", e.what(), kConfig);
    } catch (const MissingInputError& e) {
        return report("missing_input", e.what(), kMissingInput);
    } catch (const ParseError& e) {
        return report("parse", e.what(), kParse);
    } catch (const NumericError& e) {
        return report("numeric", e.what(), kNumeric);
    } catch (const std::exception& e) {
        return report("error", e.what(), kOther);
    }
    return kOther;
}
