#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "supgcl/bayesnet.hpp"
#include "supgcl/finetune.hpp"
#include "supgcl/pretrain.hpp"
#include "supgcl/synth.hpp"

// Run configuration file grammar (INI):
//
//   file    := line*
//   line    := blank | comment | section | entry
//   comment := ';' text
//   section := '[' name ']'
//   entry   := key '=' value
//
// Keys before the first section belong to the top level. Recognized
// sections and keys are listed in README.md; anything else is an error.
// Booleans are true/false, lists are comma separated.
namespace supgcl {

struct SweepGrid {
    std::vector<double> learning_rates = {1e-5, 1e-4, 1e-3};
    std::vector<std::size_t> batch_sizes = {4, 8};
    std::vector<double> taus = {0.25, 0.5, 0.75, 1.0};
};

struct RunConfig {
    /// Copied into every seeded component by apply_seed().
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    SynthSpec synth;
    /// Holds the encoder and loss settings as well.
    TrainConfig pretrain;
    FinetuneConfig finetune;
    std::vector<std::string> tasks = {"bp", "cc", "rel", "subtype", "survival"};
    BootstrapOptions estimate;
    SweepGrid sweep;

    void apply_seed(std::uint64_t s);
    /// Throws ConfigError naming the first invalid section.
    void validate() const;
};

/// Parses and validates; seeds are propagated from the top-level seed.
RunConfig parse_run_config(std::istream& in, const std::string& source);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

} // namespace supgcl
