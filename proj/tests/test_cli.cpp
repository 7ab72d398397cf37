#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "parkgen/parkgen.hpp"

using namespace parkgen;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "parkgen_test_cli";

int run(const std::string& args) {
  const std::string cmd = std::string(PARKGEN_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kRoot);
  const auto p = kRoot / name;
  std::ofstream(p) << text;
  return p;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(kRoot);
    fs::create_directories(kRoot);
    const auto cfg = write_config("scenes.cfg",
                                  "canvas_size = 32\nroad_grid_spacing = 12\npark_x = 8\npark_y = 8\n"
                                  "park_w = 16\npark_h = 16\npark_jitter = 1\n");
    ASSERT_EQ(run("synth-data --config " + cfg.string() + " --count 3 --seed 4 --out " + (kRoot / "corpus").string()), 0);
  }
};

}  // namespace

TEST_F(Cli, SynthDataWritesCorpus) {
  const auto c = load_corpus((kRoot / "corpus").string());
  EXPECT_EQ(c.size(), 3u);
  EXPECT_EQ(c.scenes[0].seed, 4u);
  EXPECT_EQ(c.params.canvas_size, 32);
}

TEST_F(Cli, CountFlagOverridesConfig) {
  const auto cfg = write_config("count.cfg",
                                "count = 9\ncanvas_size = 32\nroad_grid_spacing = 12\npark_x = 8\npark_y = 8\n"
                                "park_w = 16\npark_h = 16\npark_jitter = 1\n");
  ASSERT_EQ(run("synth-data --config " + cfg.string() + " --count 2 --out " + (kRoot / "count").string()), 0);
  EXPECT_EQ(load_corpus((kRoot / "count").string()).size(), 2u);
}

TEST_F(Cli, UnknownSubcommandOrFlagIsConfigError) {
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("synth-data --out x --bogus"), 2);
  EXPECT_EQ(run("pipeline --out x /nonexistent.png"), 2);
}

TEST_F(Cli, BadConfigValuesAreConfigErrors) {
  const auto cfg = write_config("bad.cfg", "building_density = 3\n");
  EXPECT_EQ(run("synth-data --config " + cfg.string() + " --out " + (kRoot / "bad").string()), 2);
  const auto cfg2 = write_config("bad_train.cfg", "learning_rate = -1\n");
  EXPECT_EQ(run("train --task seg_extract --config " + cfg2.string() + " --corpus " + (kRoot / "corpus").string() +
                " --out " + (kRoot / "t").string()),
            2);
  EXPECT_EQ(run("train --task nope --corpus " + (kRoot / "corpus").string() + " --out " + (kRoot / "t").string()), 2);
}

TEST_F(Cli, MissingCorpusIsDataError) {
  EXPECT_EQ(run("train --task seg_extract --corpus " + (kRoot / "no_corpus").string() + " --out " +
                (kRoot / "t").string()),
            3);
}

TEST_F(Cli, DivergentTrainingIsNumericError) {
  const auto cfg = write_config("diverge.cfg",
                                "epochs = 4\nlearning_rate = 1e30\nobjective = pix2pix\n"
                                "generator.kind = unet_gen\ngenerator.depth = 2\ngenerator.base_width = 4\n"
                                "discriminator.depth = 3\ndiscriminator.base_width = 4\n");
  EXPECT_EQ(run("train --task layout_to_scheme --config " + cfg.string() + " --corpus " +
                (kRoot / "corpus").string() + " --out " + (kRoot / "diverge").string()),
            4);
}

TEST_F(Cli, TrainInferPrepareEvaluateReport) {
  const auto cfg = write_config("tiny.cfg",
                                "epochs = 1\nobjective = pix2pix\ngenerator.kind = unet_gen\ngenerator.depth = 2\n"
                                "generator.base_width = 4\ndiscriminator.depth = 3\ndiscriminator.base_width = 4\n");
  const auto corpus = (kRoot / "corpus").string();
  ASSERT_EQ(run("train --task seg_extract --config " + cfg.string() + " --corpus " + corpus + " --out " +
                (kRoot / "ckpt").string()),
            0);
  const auto ckpt = kRoot / "ckpt" / "seg_extract.generator.ckpt";
  ASSERT_TRUE(fs::exists(ckpt));
  const auto remote = kRoot / "corpus" / "scene_00000004" / "remote.png";
  ASSERT_TRUE(fs::exists(remote));
  ASSERT_EQ(run("infer --checkpoint " + ckpt.string() + " " + remote.string() + " --out " +
                (kRoot / "pred.png").string()),
            0);
  // Output legend comes from the checkpoint, so the prediction is an indexed environment map.
  EXPECT_NO_THROW(read_classmap_png((kRoot / "pred.png").string(), Legend::environment()));

  ASSERT_EQ(run("prepare " + remote.string() + " --tile-size 16 --legend environment --out " +
                (kRoot / "tiles").string()),
            0);
  EXPECT_TRUE(fs::exists(kRoot / "tiles" / "tile_0003.png"));
  EXPECT_TRUE(fs::exists(kRoot / "tiles" / "tiles.csv"));

  const auto truth = kRoot / "corpus" / "scene_00000004" / "environment.png";
  ASSERT_EQ(run("evaluate --pred " + (kRoot / "pred.png").string() + " --truth " + truth.string() +
                " --legend environment --out " + (kRoot / "eval").string()),
            0);
  EXPECT_TRUE(fs::exists(kRoot / "eval" / "summary.json"));
  EXPECT_EQ(run("evaluate --pred " + (kRoot / "pred.png").string() + " --truth " + truth.string() +
                " --legend roads --out " + (kRoot / "eval2").string()),
            2);

  EXPECT_EQ(run("report --in " + (kRoot / "nothing").string() + " --out " + (kRoot / "rep").string()), 3);
  ExperimentReport rep;
  rep.id = ExperimentId::E2;
  rep.table.columns = {"entrance_count"};
  rep.table.add("s", {2.0});
  rep.save((kRoot / "reports").string());
  ASSERT_EQ(run("report --in " + (kRoot / "reports").string() + " --out " + (kRoot / "rep").string()), 0);
  EXPECT_TRUE(fs::exists(kRoot / "rep" / "report.md"));
}

TEST_F(Cli, PipelineNeedsConfig) {
  const auto remote = kRoot / "corpus" / "scene_00000004" / "remote.png";
  EXPECT_EQ(run("pipeline " + remote.string() + " --out " + (kRoot / "p").string()), 2);
  const auto cfg = write_config("pipe.cfg", "seg_extract = missing.ckpt\nlayout_gen = a\nscheme_gen = b\ndenoiser = c\n");
  EXPECT_EQ(run("pipeline --config " + cfg.string() + " " + remote.string() + " --out " + (kRoot / "p").string()), 2);
}
