#include "manifest.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>

#include <openssl/evp.h>

#include "supgcl/error.hpp"

namespace fs = std::filesystem;

namespace supgcl::cli {

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("cannot read " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 initialization failed");
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}

nlohmann::json hash_tree(const fs::path& root, const std::vector<std::string>& skip) {
    std::vector<fs::path> files;
    if (fs::is_regular_file(root)) {
        files.push_back(root);
    } else if (fs::is_directory(root)) {
        for (const auto& e : fs::recursive_directory_iterator(root))
            if (e.is_regular_file()) files.push_back(e.path());
    } else {
        throw MissingInputError("no such file or directory: " + root.string());
    }
    std::sort(files.begin(), files.end());
    nlohmann::json out = nlohmann::json::array();
    for (const auto& f : files) {
        const std::string rel = fs::is_directory(root) ? fs::relative(f, root).generic_string() : f.filename().string();
        if (std::find(skip.begin(), skip.end(), rel) != skip.end()) continue;
        out.push_back({{"path", rel}, {"sha256", sha256_file(f)}, {"bytes", fs::file_size(f)}});
    }
    return out;
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void RunManifest::add_input(const std::string& role, const fs::path& path) {
    inputs.push_back({{"role", role}, {"path", path.string()}, {"files", hash_tree(path, {kManifestName})}});
}

void RunManifest::write(const fs::path& out_dir) const {
    const nlohmann::json j = {{"format", "supgcl-run"},
                              {"version", 1},
                              {"command", command},
                              {"argv", argv},
                              {"config_path", config_path},
                              {"config", config},
                              {"seed", seed},
                              {"inputs", inputs},
                              {"outputs", hash_tree(out_dir, {kManifestName})},
                              {"notes", notes},
                              {"started_at", started_at},
                              {"finished_at", utc_now()}};
    std::ofstream out(out_dir / kManifestName, std::ios::binary);
    if (!out) throw Error("cannot write run manifest in " + out_dir.string());
    out << j.dump(1) << '\n';
}

} // namespace supgcl::cli
