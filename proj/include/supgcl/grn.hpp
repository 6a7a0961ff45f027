#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "supgcl/random.hpp"

namespace supgcl {

/// Ordered gene names with a name -> position index. Names are unique.
class GeneVocabulary {
public:
    GeneVocabulary() = default;
    explicit GeneVocabulary(std::vector<std::string> names);

    std::size_t size() const { return names_.size(); }
    const std::string& name(std::size_t i) const { return names_.at(i); }
    const std::vector<std::string>& names() const { return names_; }
    std::optional<std::size_t> find(const std::string& name) const;
    /// Position of `name`; throws ValidationError when unknown.
    std::size_t index_of(const std::string& name) const;

    bool operator==(const GeneVocabulary& other) const { return names_ == other.names_; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::size_t> index_;
};

using VocabularyRef = std::shared_ptr<const GeneVocabulary>;

VocabularyRef make_vocabulary(std::vector<std::string> names);

struct Edge {
    std::size_t src = 0;
    std::size_t dst = 0;
    auto operator<=>(const Edge&) const = default;
};

/// Directed gene regulatory network with one scalar feature per node
/// (expression) and per edge (regression value). Immutable once built; the
/// constructor enforces every structural invariant.
class Grn {
public:
    Grn() = default;
    Grn(VocabularyRef vocab, std::vector<Edge> edges, std::vector<double> node_features,
        std::vector<double> edge_features);

    const VocabularyRef& vocab() const { return vocab_; }
    std::size_t num_nodes() const { return node_features_.size(); }
    std::size_t num_edges() const { return edges_.size(); }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<double>& node_features() const { return node_features_; }
    const std::vector<double>& edge_features() const { return edge_features_; }

    /// Same vocabulary contents, topology and bitwise-equal features.
    bool operator==(const Grn& other) const;

private:
    VocabularyRef vocab_;
    std::vector<Edge> edges_;
    std::vector<double> node_features_;
    std::vector<double> edge_features_;
};

/// Knockdown of one gene, the a-th augmentation.
struct AugmentationOp {
    std::size_t gene_index = 0;
};

/// Zeroes the gene's node feature and the features of every in- and
/// out-edge touching it. Topology is unchanged.
Grn apply_knockdown(const Grn& g, AugmentationOp op);

/// Teacher GRNs observed under real knockdowns, keyed by gene index.
class TeacherBank {
public:
    TeacherBank() = default;
    /// Validates: nonempty key set, nonempty lists, every teacher on `vocab`.
    TeacherBank(VocabularyRef vocab, std::map<std::size_t, std::vector<Grn>> entries);

    const VocabularyRef& vocab() const { return vocab_; }
    /// Sorted key set K.
    const std::vector<std::size_t>& keys() const { return keys_; }
    std::size_t size() const { return keys_.size(); }
    bool contains(std::size_t gene) const { return entries_.count(gene) != 0; }
    /// Teachers for `gene`; throws MissingTeacherError when absent.
    const std::vector<Grn>& teachers(std::size_t gene) const;

private:
    VocabularyRef vocab_;
    std::map<std::size_t, std::vector<Grn>> entries_;
    std::vector<std::size_t> keys_;
};

/// One teacher for `op`, uniformly chosen with `rng`.
const Grn& sample_teacher(const TeacherBank& bank, AugmentationOp op, Rng& rng);

/// GRN file: {"vocab": [...], "edges": [[s, d], ...], "node_features": [...],
/// "edge_features": [...]}. When `expected` is given the file's vocabulary
/// must equal it and the loaded graph shares that handle.
Grn load_grn(const std::filesystem::path& path, const VocabularyRef& expected = nullptr);
void save_grn(const Grn& g, const std::filesystem::path& path);
nlohmann::json grn_to_json(const Grn& g);
Grn grn_from_json(const nlohmann::json& j, const std::string& context,
                  const VocabularyRef& expected = nullptr);

/// Teacher manifest: JSON map gene name -> list of GRN paths, resolved
/// relative to the manifest's directory.
TeacherBank load_teacher_bank(const std::filesystem::path& manifest, const VocabularyRef& vocab);
void save_teacher_bank(const TeacherBank& bank, const std::filesystem::path& dir,
                       const std::string& manifest_name = "teachers.json");

} // namespace supgcl
