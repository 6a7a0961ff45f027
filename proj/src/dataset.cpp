#include "supgcl/dataset.hpp"

#include <fstream>

#include "supgcl/error.hpp"

namespace supgcl {

namespace fs = std::filesystem;

namespace {

nlohmann::json read_json(const fs::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw MissingInputError(std::string(what) + " not found: " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

} // namespace

fs::path Dataset::label_path(const std::string& name) const {
    if (!has_labels(name)) throw MissingInputError("dataset lists no '" + name + "' labels");
    return root / manifest["labels"][name].get<std::string>();
}

bool Dataset::has_labels(const std::string& name) const {
    return manifest.contains("labels") && manifest["labels"].contains(name);
}

Dataset load_dataset(const fs::path& where, bool with_teachers) {
    const fs::path manifest_path = fs::is_directory(where) ? where / "dataset.json" : where;
    Dataset d;
    d.root = manifest_path.parent_path();
    d.manifest = read_json(manifest_path, "dataset manifest");
    if (d.manifest.value("format", "") != "supgcl-dataset") {
        throw ParseError(manifest_path.string() + ": not a dataset manifest");
    }
    if (!d.manifest.contains("patients")) throw ParseError(manifest_path.string() + ": missing field 'patients'");

    const fs::path list_path = d.root / d.manifest["patients"].get<std::string>();
    const nlohmann::json list = read_json(list_path, "patient list");
    if (!list.contains("patients") || !list["patients"].is_array() || list["patients"].empty()) {
        throw ParseError(list_path.string() + ": 'patients' must be a nonempty list");
    }
    for (const auto& entry : list["patients"]) {
        if (!entry.contains("id") || !entry.contains("grn")) {
            throw ParseError(list_path.string() + ": each patient needs 'id' and 'grn'");
        }
        const fs::path p = list_path.parent_path() / entry["grn"].get<std::string>();
        d.patients.push_back(load_grn(p, d.vocab));
        if (!d.vocab) d.vocab = d.patients.back().vocab();
        d.patient_ids.push_back(entry["id"].get<std::string>());
    }
    if (d.manifest.contains("reference")) {
        d.reference = load_grn(d.root / d.manifest["reference"].get<std::string>(), d.vocab);
    }
    if (with_teachers) {
        if (!d.manifest.contains("teachers")) {
            throw MissingInputError(manifest_path.string() + " lists no teacher manifest");
        }
        d.bank = load_teacher_bank(d.root / d.manifest["teachers"].get<std::string>(), d.vocab);
    }
    return d;
}

void write_patients(const std::vector<std::string>& ids, const std::vector<Grn>& graphs, const fs::path& dir,
                    const std::string& list_name) {
    if (ids.size() != graphs.size()) throw ContractError("patient ids and graphs differ in count");
    fs::create_directories(dir / "patients");
    nlohmann::json list = nlohmann::json::array();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const std::string rel = "patients/" + ids[i] + ".json";
        save_grn(graphs[i], dir / rel);
        list.push_back({{"id", ids[i]}, {"grn", rel}});
    }
    std::ofstream out(dir / list_name, std::ios::binary);
    if (!out) throw Error("cannot write patient list in " + dir.string());
    out << nlohmann::json{{"patients", list}}.dump(1) << '\n';
}

} // namespace supgcl
