#include "supgcl/grn.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "supgcl/error.hpp"

namespace supgcl {

GeneVocabulary::GeneVocabulary(std::vector<std::string> names) : names_(std::move(names)) {
    index_.reserve(names_.size());
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (!index_.emplace(names_[i], i).second) {
            throw ValidationError("duplicate gene name '" + names_[i] + "' in vocabulary");
        }
    }
}

std::optional<std::size_t> GeneVocabulary::find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t GeneVocabulary::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ValidationError("unknown gene '" + name + "'");
    return it->second;
}

VocabularyRef make_vocabulary(std::vector<std::string> names) {
    return std::make_shared<const GeneVocabulary>(std::move(names));
}

Grn::Grn(VocabularyRef vocab, std::vector<Edge> edges, std::vector<double> node_features,
         std::vector<double> edge_features)
    : vocab_(std::move(vocab)),
      edges_(std::move(edges)),
      node_features_(std::move(node_features)),
      edge_features_(std::move(edge_features)) {
    if (!vocab_) throw ValidationError("GRN without a vocabulary");
    const std::size_t n = vocab_->size();
    if (node_features_.size() != n) {
        throw ValidationError("node_features has " + std::to_string(node_features_.size()) +
                              " entries for " + std::to_string(n) + " genes");
    }
    if (edge_features_.size() != edges_.size()) {
        throw ValidationError("edge_features has " + std::to_string(edge_features_.size()) +
                              " entries for " + std::to_string(edges_.size()) + " edges");
    }
    std::set<Edge> seen;
    for (std::size_t k = 0; k < edges_.size(); ++k) {
        const Edge& e = edges_[k];
        if (e.src >= n || e.dst >= n) {
            throw ValidationError("edge " + std::to_string(k) + " references a node outside [0, " +
                                  std::to_string(n) + ")");
        }
        if (e.src == e.dst) throw ValidationError("edge " + std::to_string(k) + " is a self-loop");
        if (!seen.insert(e).second) {
            throw ValidationError("duplicate edge " + std::to_string(e.src) + "->" +
                                  std::to_string(e.dst));
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(node_features_[i])) {
            throw ValidationError("node feature " + std::to_string(i) + " is not finite");
        }
    }
    for (std::size_t k = 0; k < edges_.size(); ++k) {
        if (!std::isfinite(edge_features_[k])) {
            throw ValidationError("edge feature " + std::to_string(k) + " is not finite");
        }
    }
}

bool Grn::operator==(const Grn& other) const {
    const bool same_vocab = vocab_ == other.vocab_ ||
                            (vocab_ && other.vocab_ && *vocab_ == *other.vocab_);
    return same_vocab && edges_ == other.edges_ && node_features_ == other.node_features_ &&
           edge_features_ == other.edge_features_;
}

Grn apply_knockdown(const Grn& g, AugmentationOp op) {
    const std::size_t a = op.gene_index;
    if (a >= g.num_nodes()) {
        throw ValidationError("knockdown gene " + std::to_string(a) + " outside graph of " +
                              std::to_string(g.num_nodes()) + " genes");
    }
    std::vector<double> nodes = g.node_features();
    std::vector<double> edges = g.edge_features();
    nodes[a] = 0.0;
    for (std::size_t k = 0; k < g.num_edges(); ++k) {
        const Edge& e = g.edges()[k];
        if (e.src == a || e.dst == a) edges[k] = 0.0;
    }
    return Grn(g.vocab(), g.edges(), std::move(nodes), std::move(edges));
}

TeacherBank::TeacherBank(VocabularyRef vocab, std::map<std::size_t, std::vector<Grn>> entries)
    : vocab_(std::move(vocab)), entries_(std::move(entries)) {
    if (!vocab_) throw ValidationError("teacher bank without a vocabulary");
    if (entries_.empty()) throw ValidationError("teacher bank has no knockdown genes");
    for (const auto& [gene, list] : entries_) {
        if (gene >= vocab_->size()) {
            throw ValidationError("teacher key " + std::to_string(gene) + " outside vocabulary");
        }
        if (list.empty()) {
            throw ValidationError("no teachers listed for gene '" + vocab_->name(gene) + "'");
        }
        for (const Grn& t : list) {
            if (!t.vocab() || !(*t.vocab() == *vocab_)) {
                throw ValidationError("teacher for gene '" + vocab_->name(gene) +
                                      "' uses a different vocabulary");
            }
        }
        keys_.push_back(gene);
    }
}

const std::vector<Grn>& TeacherBank::teachers(std::size_t gene) const {
    auto it = entries_.find(gene);
    if (it == entries_.end()) {
        throw MissingTeacherError("no teacher GRN for knockdown gene " + std::to_string(gene));
    }
    return it->second;
}

const Grn& sample_teacher(const TeacherBank& bank, AugmentationOp op, Rng& rng) {
    const auto& list = bank.teachers(op.gene_index);
    return list[uniform_index(rng, list.size())];
}

nlohmann::json grn_to_json(const Grn& g) {
    nlohmann::json edges = nlohmann::json::array();
    for (const Edge& e : g.edges()) edges.push_back({e.src, e.dst});
    return {{"vocab", g.vocab()->names()},
            {"edges", std::move(edges)},
            {"node_features", g.node_features()},
            {"edge_features", g.edge_features()}};
}

namespace {

std::vector<double> read_numbers(const nlohmann::json& j, const std::string& context,
                                 const char* field) {
    const auto& arr = j.at(field);
    if (!arr.is_array()) throw ParseError(context + ": field '" + field + "' must be a list");
    std::vector<double> out;
    out.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number()) {
            throw ParseError(context + ": " + field + "[" + std::to_string(i) + "] is not a number");
        }
        const double v = arr[i].get<double>();
        if (!std::isfinite(v)) {
            throw ParseError(context + ": " + field + "[" + std::to_string(i) + "] is not finite");
        }
        out.push_back(v);
    }
    return out;
}

} // namespace

Grn grn_from_json(const nlohmann::json& j, const std::string& context, const VocabularyRef& expected) {
    try {
        for (const char* f : {"vocab", "edges", "node_features", "edge_features"}) {
            if (!j.contains(f)) throw ParseError(context + ": missing field '" + f + "'");
        }
        auto names = j.at("vocab").get<std::vector<std::string>>();
        VocabularyRef vocab;
        if (expected) {
            if (names != expected->names()) {
                throw ParseError(context + ": vocabulary does not match the expected gene set");
            }
            vocab = expected;
        } else {
            vocab = make_vocabulary(std::move(names));
        }
        std::vector<Edge> edges;
        const auto& ej = j.at("edges");
        if (!ej.is_array()) throw ParseError(context + ": field 'edges' must be a list");
        for (std::size_t k = 0; k < ej.size(); ++k) {
            const auto& pair = ej[k];
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_unsigned() ||
                !pair[1].is_number_unsigned()) {
                throw ParseError(context + ": edges[" + std::to_string(k) +
                                 "] must be a [src, dst] pair of non-negative integers");
            }
            edges.push_back({pair[0].get<std::size_t>(), pair[1].get<std::size_t>()});
        }
        auto nodes = read_numbers(j, context, "node_features");
        auto efeat = read_numbers(j, context, "edge_features");
        return Grn(std::move(vocab), std::move(edges), std::move(nodes), std::move(efeat));
    } catch (const ValidationError& e) {
        throw ParseError(context + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(context + ": " + e.what());
    }
}

Grn load_grn(const std::filesystem::path& path, const VocabularyRef& expected) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("GRN file not found: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return grn_from_json(j, path.string(), expected);
}

void save_grn(const Grn& g, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write GRN file " + path.string());
    out << grn_to_json(g).dump() << '\n';
}

TeacherBank load_teacher_bank(const std::filesystem::path& manifest, const VocabularyRef& vocab) {
    std::ifstream in(manifest);
    if (!in) throw MissingInputError("teacher manifest not found: " + manifest.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(manifest.string() + ": " + e.what());
    }
    if (!j.is_object()) throw ParseError(manifest.string() + ": expected a map gene -> paths");
    const auto base = manifest.parent_path();
    std::map<std::size_t, std::vector<Grn>> entries;
    for (const auto& [gene, paths] : j.items()) {
        const auto idx = vocab->find(gene);
        if (!idx) throw ParseError(manifest.string() + ": unknown gene '" + gene + "'");
        if (!paths.is_array()) {
            throw ParseError(manifest.string() + ": entry '" + gene + "' must list paths");
        }
        auto& list = entries[*idx];
        for (const auto& p : paths) {
            std::filesystem::path fp = p.get<std::string>();
            if (fp.is_relative()) fp = base / fp;
            list.push_back(load_grn(fp, vocab));
        }
    }
    try {
        return TeacherBank(vocab, std::move(entries));
    } catch (const ValidationError& e) {
        throw ParseError(manifest.string() + ": " + e.what());
    }
}

void save_teacher_bank(const TeacherBank& bank, const std::filesystem::path& dir,
                       const std::string& manifest_name) {
    std::filesystem::create_directories(dir / "teachers");
    nlohmann::json manifest = nlohmann::json::object();
    for (std::size_t gene : bank.keys()) {
        const std::string& name = bank.vocab()->name(gene);
        nlohmann::json paths = nlohmann::json::array();
        const auto& list = bank.teachers(gene);
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string rel = "teachers/" + name + "_" + std::to_string(i) + ".json";
            save_grn(list[i], dir / rel);
            paths.push_back(rel);
        }
        manifest[name] = std::move(paths);
    }
    std::ofstream out(dir / manifest_name);
    if (!out) throw Error("cannot write teacher manifest in " + dir.string());
    out << manifest.dump(2) << '\n';
}

} // namespace supgcl
