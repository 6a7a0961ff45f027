#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "supgcl/expression.hpp"
#include "supgcl/grn.hpp"

namespace supgcl {

/// On-disk dataset described by dataset.json:
///   {"format": "supgcl-dataset", "version": 1,
///    "patients": "patients.json",          // {"patients": [{"id", "grn"}]}
///    "teachers": "teachers.json",          // optional teacher manifest
///    "reference": "reference.json",        // optional GRN for node tasks
///    "expression": "expression.tsv",       // optional
///    "labels": {"bp": ..., "cc": ..., "rel": ..., "subtype": ..., "survival": ...}}
/// Paths are relative to the manifest's directory.
struct Dataset {
    std::filesystem::path root;
    nlohmann::json manifest;
    VocabularyRef vocab;
    std::vector<std::string> patient_ids;
    std::vector<Grn> patients;
    std::optional<TeacherBank> bank;
    std::optional<Grn> reference;

    /// Absolute path of a label file; throws MissingInputError if not listed.
    std::filesystem::path label_path(const std::string& name) const;
    bool has_labels(const std::string& name) const;
};

/// `where` is a dataset directory or its dataset.json. Teachers are loaded
/// only when `with_teachers`; a missing teacher manifest then raises
/// MissingInputError.
Dataset load_dataset(const std::filesystem::path& where, bool with_teachers);

/// Writes patients/<id>.json for every graph and the patients.json list.
void write_patients(const std::vector<std::string>& ids, const std::vector<Grn>& graphs,
                    const std::filesystem::path& dir, const std::string& list_name = "patients.json");

} // namespace supgcl
