#include "supgcl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "supgcl/error.hpp"

namespace supgcl {

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError(key + ": '" + text + "' is not a valid number");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true") return true;
    if (text == "false") return false;
    throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
    std::vector<T> out;
    for (const auto& s : split_list(text)) out.push_back(parse_number<T>(key, s));
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

template <typename T, typename Get>
Setter number(Get get) {
    return [get](RunConfig& c, const std::string& k, const std::string& v) { get(c) = parse_number<T>(k, v); };
}

template <typename Get>
Setter boolean(Get get) {
    return [get](RunConfig& c, const std::string& k, const std::string& v) { get(c) = parse_bool(k, v); };
}

const std::map<std::string, Setter>& setters() {
    using S = std::size_t;
    using U = std::uint64_t;
    static const std::map<std::string, Setter> table = {
        {"seed", number<U>([](RunConfig& c) -> U& { return c.seed; })},
        {"threads", number<S>([](RunConfig& c) -> S& { return c.threads; })},

        {"synth.n_genes", number<S>([](RunConfig& c) -> S& { return c.synth.n_genes; })},
        {"synth.n_patients", number<S>([](RunConfig& c) -> S& { return c.synth.n_patients; })},
        {"synth.n_knockdown_genes", number<S>([](RunConfig& c) -> S& { return c.synth.n_knockdown_genes; })},
        {"synth.n_teachers_per_gene", number<S>([](RunConfig& c) -> S& { return c.synth.n_teachers_per_gene; })},
        {"synth.teacher_replicates", number<S>([](RunConfig& c) -> S& { return c.synth.teacher_replicates; })},
        {"synth.density", number<double>([](RunConfig& c) -> double& { return c.synth.density; })},
        {"synth.noise", number<double>([](RunConfig& c) -> double& { return c.synth.noise; })},
        {"synth.weight_min", number<double>([](RunConfig& c) -> double& { return c.synth.weight_min; })},
        {"synth.weight_max", number<double>([](RunConfig& c) -> double& { return c.synth.weight_max; })},
        {"synth.negative_fraction", number<double>([](RunConfig& c) -> double& { return c.synth.negative_fraction; })},
        {"synth.basal_min", number<double>([](RunConfig& c) -> double& { return c.synth.basal_min; })},
        {"synth.basal_max", number<double>([](RunConfig& c) -> double& { return c.synth.basal_max; })},
        {"synth.n_subtypes", number<S>([](RunConfig& c) -> S& { return c.synth.n_subtypes; })},
        {"synth.label_noise", number<double>([](RunConfig& c) -> double& { return c.synth.label_noise; })},
        {"synth.censoring_rate", number<double>([](RunConfig& c) -> double& { return c.synth.censoring_rate; })},

        {"encoder.layers", number<S>([](RunConfig& c) -> S& { return c.pretrain.encoder.layers; })},
        {"encoder.hidden_dim", number<S>([](RunConfig& c) -> S& { return c.pretrain.encoder.hidden_dim; })},
        {"encoder.heads", number<S>([](RunConfig& c) -> S& { return c.pretrain.encoder.heads; })},
        {"encoder.reverse_messages", boolean([](RunConfig& c) -> bool& { return c.pretrain.encoder.reverse_messages; })},

        {"loss.tau_node", number<double>([](RunConfig& c) -> double& { return c.pretrain.loss.tau_node; })},
        {"loss.tau_aug", number<double>([](RunConfig& c) -> double& { return c.pretrain.loss.tau_aug; })},
        {"loss.normalize_frobenius", boolean([](RunConfig& c) -> bool& { return c.pretrain.loss.normalize_frobenius; })},

        {"pretrain.epochs", number<S>([](RunConfig& c) -> S& { return c.pretrain.epochs; })},
        {"pretrain.batch_size", number<S>([](RunConfig& c) -> S& { return c.pretrain.batch_size; })},
        {"pretrain.learning_rate", number<double>([](RunConfig& c) -> double& { return c.pretrain.learning_rate; })},
        {"pretrain.weight_decay", number<double>([](RunConfig& c) -> double& { return c.pretrain.weight_decay; })},
        {"pretrain.patience", number<S>([](RunConfig& c) -> S& { return c.pretrain.patience; })},
        {"pretrain.validation_fraction",
         number<double>([](RunConfig& c) -> double& { return c.pretrain.validation_fraction; })},
        {"pretrain.objective",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             try {
                 c.pretrain.objective = objective_from_string(v);
             } catch (const ContractError& e) {
                 throw ConfigError(k + ": " + e.what());
             }
         }},

        {"finetune.epochs", number<S>([](RunConfig& c) -> S& { return c.finetune.epochs; })},
        {"finetune.batch_size", number<S>([](RunConfig& c) -> S& { return c.finetune.batch_size; })},
        {"finetune.learning_rate", number<double>([](RunConfig& c) -> double& { return c.finetune.learning_rate; })},
        {"finetune.weight_decay", number<double>([](RunConfig& c) -> double& { return c.finetune.weight_decay; })},
        {"finetune.head_hidden", number<S>([](RunConfig& c) -> S& { return c.finetune.head_hidden; })},
        {"finetune.folds", number<S>([](RunConfig& c) -> S& { return c.finetune.folds; })},
        {"finetune.repeats", number<S>([](RunConfig& c) -> S& { return c.finetune.repeats; })},
        {"finetune.test_fraction", number<double>([](RunConfig& c) -> double& { return c.finetune.test_fraction; })},
        {"finetune.freeze_encoder", boolean([](RunConfig& c) -> bool& { return c.finetune.freeze_encoder; })},
        {"finetune.threshold", number<double>([](RunConfig& c) -> double& { return c.finetune.threshold; })},
        {"finetune.tasks",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.tasks = split_list(v);
             if (c.tasks.empty()) throw ConfigError(k + ": empty list");
             for (const auto& t : c.tasks) {
                 try {
                     task_spec(t);
                 } catch (const ContractError& e) {
                     throw ConfigError(k + ": " + e.what());
                 }
             }
         }},

        {"estimate.num_bases", number<S>([](RunConfig& c) -> S& { return c.estimate.search.score.spline.num_bases; })},
        {"estimate.degree", number<S>([](RunConfig& c) -> S& { return c.estimate.search.score.spline.degree; })},
        {"estimate.ridge", number<double>([](RunConfig& c) -> double& { return c.estimate.search.score.spline.ridge; })},
        {"estimate.kappa", number<double>([](RunConfig& c) -> double& { return c.estimate.search.score.kappa; })},
        {"estimate.max_iters", number<S>([](RunConfig& c) -> S& { return c.estimate.search.max_iters; })},
        {"estimate.max_parents", number<S>([](RunConfig& c) -> S& { return c.estimate.search.max_parents; })},
        {"estimate.runs", number<S>([](RunConfig& c) -> S& { return c.estimate.runs; })},
        {"estimate.threshold", number<double>([](RunConfig& c) -> double& { return c.estimate.threshold; })},

        {"sweep.learning_rates",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.sweep.learning_rates = parse_list<double>(k, v);
         }},
        {"sweep.batch_sizes",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             c.sweep.batch_sizes = parse_list<std::size_t>(k, v);
         }},
        {"sweep.taus",
         [](RunConfig& c, const std::string& k, const std::string& v) { c.sweep.taus = parse_list<double>(k, v); }},
    };
    return table;
}

} // namespace

void RunConfig::apply_seed(std::uint64_t s) {
    seed = s;
    synth.seed = s;
    pretrain.seed = s;
    pretrain.encoder.seed = s;
    finetune.seed = s;
    estimate.seed = s;
}

void RunConfig::validate() const {
    auto check = [](const char* section, auto&& fn) {
        try {
            fn();
        } catch (const ContractError& e) {
            throw ConfigError(std::string("[") + section + "] " + e.what());
        }
    };
    if (threads == 0) throw ConfigError("threads must be positive");
    check("synth", [&] { synth.validate(); });
    check("pretrain", [&] { pretrain.validate(); });
    check("finetune", [&] { finetune.validate(); });
    check("estimate", [&] {
        if (estimate.runs == 0) throw ContractError("runs must be positive");
        if (!(estimate.threshold > 0.0 && estimate.threshold <= 1.0)) {
            throw ContractError("threshold must lie in (0, 1]");
        }
        if (estimate.search.score.spline.num_bases <= estimate.search.score.spline.degree) {
            throw ContractError("num_bases must exceed degree");
        }
    });
    for (double t : sweep.taus)
        if (!(t > 0.0)) throw ConfigError("[sweep] taus must be positive");
    for (double lr : sweep.learning_rates)
        if (!(lr >= 0.0)) throw ConfigError("[sweep] learning_rates must be non-negative");
    for (std::size_t b : sweep.batch_sizes)
        if (b == 0) throw ConfigError("[sweep] batch_sizes must be positive");
}

RunConfig parse_run_config(std::istream& in, const std::string& source) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    // Top-level seed first so per-section parsing starts from seeded defaults.
    RunConfig cfg;
    if (auto s = tree.get_optional<std::string>("seed")) cfg.seed = parse_number<std::uint64_t>("seed", *s);
    cfg.apply_seed(cfg.seed);
    const auto& table = setters();
    auto set = [&](const std::string& key, const std::string& value) {
        auto it = table.find(key);
        if (it == table.end()) throw ConfigError(source + ": unknown key '" + key + "'");
        try {
            it->second(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(source + ": " + e.what());
        }
    };
    for (const auto& [name, node] : tree) {
        if (node.empty()) {
            set(name, node.data());
            continue;
        }
        for (const auto& [key, leaf] : node) {
            if (!leaf.empty()) throw ConfigError(source + ": nested key under [" + name + "]");
            set(name + "." + key, leaf.data());
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("config file not found: " + path.string());
    return parse_run_config(in, path.string());
}

nlohmann::json to_json(const RunConfig& cfg) {
    return {{"seed", cfg.seed},
            {"threads", cfg.threads},
            {"synth", to_json(cfg.synth)},
            {"pretrain", to_json(cfg.pretrain)},
            {"finetune", to_json(cfg.finetune)},
            {"tasks", cfg.tasks},
            {"estimate",
             {{"num_bases", cfg.estimate.search.score.spline.num_bases},
              {"degree", cfg.estimate.search.score.spline.degree},
              {"ridge", cfg.estimate.search.score.spline.ridge},
              {"kappa", cfg.estimate.search.score.kappa},
              {"max_iters", cfg.estimate.search.max_iters},
              {"max_parents", cfg.estimate.search.max_parents},
              {"runs", cfg.estimate.runs},
              {"threshold", cfg.estimate.threshold}}},
            {"sweep",
             {{"learning_rates", cfg.sweep.learning_rates},
              {"batch_sizes", cfg.sweep.batch_sizes},
              {"taus", cfg.sweep.taus}}}};
}

} // namespace supgcl
