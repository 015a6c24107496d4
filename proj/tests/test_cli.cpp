#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "support.hpp"

using namespace wrinkle;
using wrinkle::testing::data_dir;
using wrinkle::testing::scratch_dir;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(WRINKLE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int count_lines(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(scratch_dir("cli"));
    ASSERT_EQ(run("synth --out " + (*root_ / "data").string() + " --count 4 --seed 3"), 0);
  }
  static void TearDownTestSuite() { delete root_; }
  static fs::path root() { return *root_; }
  static std::string quick(int budget = 24) {
    return " --dataset " + (root() / "data").string() +
           " --oracle-weights " + (root() / "data/oracle.json").string() + " --budget " + std::to_string(budget);
  }
  static fs::path* root_;
};
fs::path* Cli::root_ = nullptr;

}  // namespace

TEST_F(Cli, AttackTwiceGivesIdenticalResults) {
  const auto a = root() / "a";
  const auto b = root() / "b";
  ASSERT_EQ(run("attack" + quick() + " --seed 7 --out " + a.string()), 0);
  ASSERT_EQ(run("attack" + quick() + " --seed 7 --workers 2 --out " + b.string()), 0);
  EXPECT_EQ(slurp(a / "results.csv"), slurp(b / "results.csv"));
  EXPECT_EQ(count_lines(a / "results.csv"), 5);
}

TEST_F(Cli, ManifestRecordsFlags) {
  const auto out = root() / "m";
  ASSERT_EQ(run("attack" + quick(350) + " --population 8 --seed 1 --out " +
                out.string()),
            0);
  const auto manifest = read_json_file(out / "manifest.json");
  EXPECT_EQ(manifest.at("config").at("attack").at("ga").at("budget"), 350);
  EXPECT_EQ(manifest.at("config").at("attack").at("ga").at("population"), 8);
  EXPECT_EQ(manifest.at("attack").at("ga").at("budget"), 350);
  EXPECT_EQ(manifest.at("master_seed"), 1u);
}

TEST_F(Cli, ConfigFileIsLayeredUnderFlags) {
  const auto cfg = root() / "cfg.json";
  {
    std::ofstream(cfg) << R"({"attack": {"ga": {"budget": 16, "population": 4, "seed": 5}},
                             "oracle": {"generator": "quadrant", "gain": 12}})";
  }
  const auto out = root() / "layered";
  ASSERT_EQ(run("attack --config " + cfg.string() + " --dataset " +
                (root() / "data").string() + " --population 8 --out " + out.string()),
            0);
  const auto manifest = read_json_file(out / "manifest.json");
  EXPECT_EQ(manifest.at("attack").at("ga").at("budget"), 16);
  EXPECT_EQ(manifest.at("attack").at("ga").at("population"), 8);
  EXPECT_EQ(manifest.at("attack").at("ga").at("seed"), 5u);
  EXPECT_EQ(manifest.at("oracle").at("generator"), "quadrant");

  const auto replay = root() / "replay";
  ASSERT_EQ(run("attack --config " + (out / "manifest.json").string() + " --out " +
                replay.string()),
            0);
  EXPECT_EQ(slurp(out / "results.csv"), slurp(replay / "results.csv"));
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("attack --budget 10"), 2);
  EXPECT_EQ(run("attack" + quick() + " --population 1"), 2);
  EXPECT_EQ(run("attack" + quick() + " --components Q"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("sweep" + quick() + " --axis temperature --values 1,2 --out " +
                (root() / "bad").string()),
            2);
  EXPECT_EQ(run("render --gene " + (data_dir() / "not_an_image.txt").string() + " --input " +
                (data_dir() / "fixture_scene.png").string() + " --output " +
                (root() / "x.png").string()),
            3);
}

TEST_F(Cli, IoAndOracleErrors) {
  EXPECT_EQ(run("attack --dataset " + (root() / "nowhere").string() + " --out " +
                (root() / "io").string()),
            3);
  EXPECT_EQ(run("transfer --run " + (root() / "nowhere").string()), 3);
  EXPECT_EQ(run("attack --dataset " + (root() / "data").string() +
                " --endpoint http://127.0.0.1:9 --timeout 0.5 --retries 0 --out " +
                (root() / "remote").string()),
            4);
}

TEST_F(Cli, RenderIdentityGene) {
  const auto gene = root() / "identity.json";
  write_json_file(gene, identity_gene());
  const auto out = root() / "identity.png";
  const auto input = data_dir() / "fixture_scene.png";
  ASSERT_EQ(run("render --gene " + gene.string() + " --input " + input.string() +
                " --output " + out.string()),
            0);
  EXPECT_EQ(load_image(out), load_image(input));
}

TEST_F(Cli, RenderMatchesGoldenAndDumpsFields) {
  const auto out = root() / "golden.png";
  ASSERT_EQ(run("render --gene " + (data_dir() / "reference_gene.json").string() +
                " --input " + (data_dir() / "fixture_scene.png").string() + " --output " +
                out.string() + " --dump-field"),
            0);
  EXPECT_EQ(load_image(out), load_image(data_dir() / "golden_render.png"));
  for (const char* suffix : {"_field.png", "_displacement.png", "_brightness.png"}) {
    const auto p = root() / (std::string("golden") + suffix);
    ASSERT_TRUE(fs::exists(p)) << p;
    EXPECT_EQ(load_image(p).channels, 1);
  }
}

TEST_F(Cli, RenderFromAttackRecordReproducesSavedImage) {
  const auto run_dir = root() / "rerender";
  ASSERT_EQ(run("attack" + quick() + " --seed 3 --out " + run_dir.string()), 0);
  const auto results = load_results(run_dir);
  ASSERT_FALSE(results.empty());
  for (const auto& r : results) {
    if (!r.gene) continue;
    const auto out = root() / ("re_" + r.image_id + ".png");
    ASSERT_EQ(run("render --gene " + (run_dir / "results" / (r.image_id + ".json")).string() +
                  " --input " + (root() / "data" / r.filename).string() + " --output " +
                  out.string()),
              0);
    EXPECT_EQ(slurp(out), slurp(run_dir / r.output));
  }
}

TEST_F(Cli, SweepRowCounts) {
  const auto pop = root() / "sweep_pop";
  ASSERT_EQ(run("sweep" + quick() + " --axis population --values 4,8,12,16 --out " +
                pop.string()),
            0);
  EXPECT_EQ(count_lines(pop / "sweep.csv"), 5);
  const auto a2 = root() / "sweep_a2";
  ASSERT_EQ(run("sweep" + quick() + " --axis alpha2 --values 0.1,0.3,0.5 --out " +
                a2.string()),
            0);
  EXPECT_EQ(count_lines(a2 / "sweep.csv"), 4);
  const auto comp = root() / "sweep_comp";
  ASSERT_EQ(run("sweep" + quick() + " --axis components --values L,M,S,L+M,full --out " +
                comp.string()),
            0);
  EXPECT_EQ(count_lines(comp / "sweep.csv"), 6);
}

TEST_F(Cli, TransferWritesReport) {
  const auto run_dir = root() / "transfer_run";
  ASSERT_EQ(run("attack" + quick() + " --seed 2 --out " + run_dir.string()), 0);
  ASSERT_EQ(run("transfer --run " + run_dir.string() + " --oracle-generator toy --classes 4"),
            0);
  const auto t = read_json_file(run_dir / "transfer.json");
  EXPECT_EQ(t.at("count"), 4);
  ASSERT_EQ(run("transfer --run " + run_dir.string() + " --oracle-weights " +
                (root() / "data/oracle.json").string() + " --out " +
                (root() / "same.json").string()),
            0);
  const auto same = read_json_file(root() / "same.json");
  const auto summary = read_json_file(run_dir / "summary.json");
  EXPECT_EQ(same.at("adv_acc").get<double>(), summary.at("post_acc").get<double>());
}
