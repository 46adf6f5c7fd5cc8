#include <cstdlib>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "mumar/dataset.hpp"
#include "mumar/ply.hpp"
#include "test_util.hpp"

namespace mumar {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

struct CliResult {
  int exit_code;
  std::string err;
};

CliResult cli(const std::string& args, const TempDir& scratch) {
  const fs::path err = scratch / "stderr.txt";
  const std::string cmd = std::string("\"") + MUMAR_CLI + "\" " + args + " > /dev/null 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  std::string text;
  if (fs::exists(err)) text = read_text(err);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, text};
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    data_ = new TempDir("cli_data");
    const CliResult r = cli("generate --views 3 --out " + q(data_->path()), *data_);
    ASSERT_EQ(r.exit_code, 0) << r.err;
  }
  static void TearDownTestSuite() {
    delete data_;
    data_ = nullptr;
  }

  static TempDir* data_;
  TempDir scratch_{"cli"};
};

TempDir* Cli::data_ = nullptr;

TEST_F(Cli, GenerateWritesManifestAndConfig) {
  const ViewManifest m = load_manifest(data_->path());
  EXPECT_EQ(m.views.size(), 3u);
  EXPECT_TRUE(fs::exists(data_->path() / "run_config.json"));
  EXPECT_TRUE(fs::exists(data_->path() / "reference_object.ply"));
  EXPECT_TRUE(fs::exists(data_->path() / "ground_truth" / "view_002.txt"));
  const RunConfig c = run_config_from_json(read_text(data_->path() / "run_config.json"));
  ASSERT_TRUE(c.scene.has_value());
  EXPECT_EQ(c.scene->n_views, 3u);
}

TEST_F(Cli, SingleViewManifest) {
  const CliResult r = cli("generate --views 1 --out " + q(scratch_ / "one"), scratch_);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(load_manifest(scratch_ / "one").views.size(), 1u);
}

TEST_F(Cli, RegisterWritesArtifactsAndRerunsIdentically) {
  const fs::path out = scratch_ / "res";
  CliResult r = cli("register --input " + q(data_->path()) + " --window 3 --out " + q(out), scratch_);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  for (const char* f : {"transforms/view_000.txt", "transforms/view_002.txt", "merged_object.ply", "report.json",
                        "error_trace.csv", "run_config.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const fs::path again = scratch_ / "again";
  r = cli("register --config " + q(out / "run_config.json") + " --out " + q(again), scratch_);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  for (const char* f : {"transforms/view_001.txt", "merged_object.ply", "report.json", "error_trace.csv"}) {
    EXPECT_EQ(read_text(out / f), read_text(again / f)) << f;
  }
}

TEST_F(Cli, IcpBackendAndEvaluate) {
  const fs::path out = scratch_ / "icp";
  CliResult r = cli("register --input " + q(data_->path()) + " --backend icp --out " + q(out), scratch_);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(read_text(out / "report.json").find("\"icp\""), std::string::npos);

  r = cli("evaluate --result " + q(out / "merged_object.ply") + " --reference " +
              q(data_->path() / "reference_object.ply") + " --fine-align --out " + q(scratch_ / "eval"),
          scratch_);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_TRUE(fs::exists(scratch_ / "eval" / "stats.csv"));
  EXPECT_EQ(read_ply(scratch_ / "eval" / "distances.ply").size(), read_ply(out / "merged_object.ply").size());
}

TEST_F(Cli, EvaluateSelfIsZero) {
  const fs::path cloud = data_->path() / "views" / "view_000_object.ply";
  const CliResult r = cli("evaluate --result " + q(cloud) + " --reference " + q(cloud) + " --out " + q(scratch_ / "e"),
                    scratch_);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const std::string csv = read_text(scratch_ / "e" / "stats.csv");
  EXPECT_EQ(csv.substr(csv.find('\n') + 1, 8), "0,0,0,0,");
}

TEST_F(Cli, InputErrorsExitThree) {
  CliResult r = cli("evaluate --result " + q(scratch_ / "nope.ply") + " --reference " + q(scratch_ / "nope.ply"), scratch_);
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.err.find("nope.ply"), std::string::npos);
  r = cli("register --input " + q(scratch_ / "nowhere"), scratch_);
  EXPECT_EQ(r.exit_code, 3);
  r = cli("generate --object sphere --out " + q(scratch_ / "x"), scratch_);
  EXPECT_EQ(r.exit_code, 3);
  r = cli("frobnicate", scratch_);
  EXPECT_EQ(r.exit_code, 3);
}

TEST_F(Cli, CorruptPlyIsNamed) {
  const fs::path copy = scratch_ / "copy";
  fs::copy(data_->path(), copy, fs::copy_options::recursive);
  write_text(copy / "views" / "view_001_marker_2.ply", "ply\nformat ascii 1.0\nelement vertex 5\nend_header\n");
  const CliResult r = cli("register --input " + q(copy) + " --out " + q(scratch_ / "r"), scratch_);
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.err.find("view_001_marker_2.ply"), std::string::npos) << r.err;
}

TEST_F(Cli, NotConvergedExitsTwoWithReport) {
  RunConfig c;
  c.input_dir = data_->path();
  c.registration.window = 3;
  c.registration.max_iters = 1;
  write_text(scratch_ / "cfg.json", to_json(c));
  const fs::path out = scratch_ / "nc";
  const CliResult r = cli("register --config " + q(scratch_ / "cfg.json") + " --out " + q(out), scratch_);
  EXPECT_EQ(r.exit_code, 2) << r.err;
  EXPECT_TRUE(fs::exists(out / "report.json"));
  EXPECT_NE(read_text(out / "report.json").find("\"converged\": false"), std::string::npos);
}

}  // namespace
}  // namespace mumar
