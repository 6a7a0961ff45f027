#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace supgcl::cli {

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Every regular file under `root` (or `root` itself), sorted by relative
/// path, as [{"path", "sha256", "bytes"}]. `skip` names files to leave out.
nlohmann::json hash_tree(const std::filesystem::path& root, const std::vector<std::string>& skip = {});

/// Record of one CLI invocation, written as run_manifest.json in the output
/// directory. Timestamps are the only fields that differ between reruns.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    std::string config_path;
    nlohmann::json config;
    std::uint64_t seed = 0;
    nlohmann::json inputs = nlohmann::json::array();
    nlohmann::json notes = nlohmann::json::object();
    std::string started_at;

    void add_input(const std::string& role, const std::filesystem::path& path);
    /// Hashes the output directory and writes run_manifest.json into it.
    void write(const std::filesystem::path& out_dir) const;
};

inline constexpr const char* kManifestName = "run_manifest.json";

std::string utc_now();

} // namespace supgcl::cli
