#include <gtest/gtest.h>

#include <sstream>

#include "supgcl/config.hpp"
#include "supgcl/error.hpp"

using namespace supgcl;

namespace {

RunConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_run_config(in, "test.ini");
}

} // namespace

TEST(RunConfig, DefaultsWhenEmpty) {
    auto c = parse("");
    EXPECT_EQ(c.seed, 0u);
    EXPECT_EQ(c.pretrain.encoder.hidden_dim, 64u);
    EXPECT_EQ(c.tasks.size(), 5u);
}

TEST(RunConfig, SectionsAndSeedPropagation) {
    auto c = parse(
        "; comment\n"
        "seed = 42\n"
        "[synth]\nn_genes = 12\ndensity = 0.2\n"
        "[encoder]\nlayers = 2\nhidden_dim = 8\nheads = 2\nreverse_messages = false\n"
        "[loss]\ntau_aug = 0.5\n"
        "[pretrain]\nobjective = grace\nepochs = 3\n"
        "[finetune]\ntasks = bp, rel\nfreeze_encoder = true\n"
        "[sweep]\ntaus = 0.25,1.0\n");
    EXPECT_EQ(c.synth.n_genes, 12u);
    EXPECT_EQ(c.synth.seed, 42u);
    EXPECT_EQ(c.pretrain.seed, 42u);
    EXPECT_EQ(c.pretrain.encoder.seed, 42u);
    EXPECT_EQ(c.finetune.seed, 42u);
    EXPECT_EQ(c.estimate.seed, 42u);
    EXPECT_FALSE(c.pretrain.encoder.reverse_messages);
    EXPECT_EQ(c.pretrain.loss.tau_aug, 0.5);
    EXPECT_EQ(c.pretrain.objective, Objective::grace);
    EXPECT_EQ(c.tasks, (std::vector<std::string>{"bp", "rel"}));
    EXPECT_TRUE(c.finetune.freeze_encoder);
    EXPECT_EQ(c.sweep.taus, (std::vector<double>{0.25, 1.0}));
}

TEST(RunConfig, RejectsBadInput) {
    EXPECT_THROW(parse("[encoder]\nlayerz = 2\n"), ConfigError);
    EXPECT_THROW(parse("[encoder]\nlayers = two\n"), ConfigError);
    EXPECT_THROW(parse("[encoder]\nheads = 3\n"), ConfigError);
    EXPECT_THROW(parse("[loss]\ntau_node = 0\n"), ConfigError);
    EXPECT_THROW(parse("[pretrain]\nobjective = simclr\n"), ConfigError);
    EXPECT_THROW(parse("[finetune]\ntasks = bp, go\n"), ConfigError);
    EXPECT_THROW(parse("[finetune]\nfreeze_encoder = yes\n"), ConfigError);
    EXPECT_THROW(parse("[synth\n"), ConfigError);
    EXPECT_THROW(load_run_config("/nonexistent/run.ini"), MissingInputError);
}

TEST(RunConfig, JsonCarriesEverySection) {
    auto j = to_json(parse("seed = 3\n"));
    for (const char* k : {"seed", "synth", "pretrain", "finetune", "tasks", "estimate", "sweep"}) EXPECT_TRUE(j.contains(k));
    EXPECT_EQ(j["pretrain"]["seed"], 3);
}
