// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "geofno/blob.hpp"
#include "geofno/checkpoint.hpp"
#include "geofno/config.hpp"
#include "geofno/training.hpp"

#ifdef GEOFNO_CLI

namespace geofno {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = -1;
  std::string out;
};

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "geofno_cli_test";
    fs::remove_all(root_);
    fs::create_directories(root_);
    write(root_ / "data.ini",
          "[data]\nn_theta = 12\nn_radial = 5\ntrain_count = 10\ntest_count = 3\nseed = 4\n");
    write(root_ / "model.ini",
          "[model]\nio_mode = point_cloud\nwidth = 4\nlayers = 3\nk_max = 2, 2\nlatent_grid = 6, 6\n"
          "lift_hidden = 6\nproj_hidden = 6\nmap = learned\ndeform_frequencies = 2\ndeform_hidden = 6\n"
          "[train]\nepochs = 4\ninitial_lr = 0.005\nlr_halving_period = 2\nbatch_size = 4\nseed = 1\n");
    ASSERT_EQ(invoke("gen-data --config " + q(root_ / "data.ini") + " --out " + q(root_ / "data")).code, 0);
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static std::string q(const fs::path& p) { return "'" + p.string() + "'"; }
  static void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }
  static CliResult invoke(const std::string& args) {
    const fs::path log = root_ / "last_output.txt";
    const std::string cmd = std::string("'") + GEOFNO_CLI + "' " + args + " > " + q(log) + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
  }
  static std::string dir_bytes(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string all;
    for (const auto& f : files) all += f.filename().string() + "\n" + blob::read_file(f);
    return all;
  }
  static std::vector<std::string> log_rows(const fs::path& log, std::size_t from_epoch) {
    std::ifstream in(log);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> rows;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::size_t epoch;
      std::string train, test, lr;
      ls >> epoch >> train >> test >> lr;
      if (epoch >= from_epoch) rows.push_back(std::to_string(epoch) + " " + train + " " + test + " " + lr);
    }
    return rows;
  }

  static fs::path root_;
};
fs::path Cli::root_;

TEST_F(Cli, GenDataWritesBundlesDeterministically) {
  ASSERT_TRUE(fs::exists(root_ / "data" / "train" / "manifest.txt"));
  ASSERT_EQ(invoke("gen-data --config " + q(root_ / "data.ini") + " --out " + q(root_ / "again")).code, 0);
  EXPECT_EQ(dir_bytes(root_ / "data" / "train"), dir_bytes(root_ / "again" / "train"));
  EXPECT_EQ(dir_bytes(root_ / "data" / "test"), dir_bytes(root_ / "again" / "test"));
}

TEST_F(Cli, MalformedConfigKeyIsUsageError) {
  write(root_ / "bad.ini", "[data]\nn_thteta = 12\n");
  const CliResult r = invoke("gen-data --config " + q(root_ / "bad.ini") + " --out " + q(root_ / "bad"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("n_thteta"), std::string::npos) << r.out;
}

TEST_F(Cli, UnknownSuiteAndMissingArgumentsAreUsageErrors) {
  EXPECT_EQ(invoke("verify --suite nonsense").code, 2);
  EXPECT_EQ(invoke("train").code, 2);
  EXPECT_EQ(invoke("frobnicate").code, 2);
}

TEST_F(Cli, OneEpochTrainWritesLoadableCheckpoint) {
  const fs::path out = root_ / "one";
  const CliResult r = invoke("train --quiet --epochs 1 --data " + q(root_ / "data" / "train") + " --test-data " +
                    q(root_ / "data" / "test") + " --model-config " + q(root_ / "model.ini") + " --out " + q(out));
  ASSERT_EQ(r.code, 0) << r.out;
  const Checkpoint ck = load_checkpoint(out / "checkpoint.gfnc");
  ASSERT_TRUE(ck.state.has_value());
  EXPECT_EQ(ck.state->report.epochs.size(), 1u);
  const CliResult ev = invoke("eval --checkpoint " + q(out / "checkpoint.gfnc") + " --data " + q(root_ / "data" / "test"));
  EXPECT_EQ(ev.code, 0) << ev.out;
  EXPECT_EQ(invoke("eval --fail-above 1e-12 --checkpoint " + q(out / "checkpoint.gfnc") + " --data " +
                q(root_ / "data" / "test"))
                .code,
            1);
}

TEST_F(Cli, ResumedTrainingEqualsUninterruptedRun) {
  const std::string data = " --data " + q(root_ / "data" / "train") + " --test-data " + q(root_ / "data" / "test");
  ASSERT_EQ(invoke("train --quiet" + data + " --model-config " + q(root_ / "model.ini") + " --out " + q(root_ / "full"))
                .code,
            0);
  ASSERT_EQ(invoke("train --quiet --epochs 2" + data + " --model-config " + q(root_ / "model.ini") + " --out " +
                q(root_ / "half"))
                .code,
            0);
  const CliResult r = invoke("train --quiet --epochs 4" + data + " --resume " + q(root_ / "half" / "checkpoint.gfnc") +
                    " --out " + q(root_ / "rest"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto full = log_rows(root_ / "full" / "train_log.txt", 2);
  const auto rest = log_rows(root_ / "rest" / "train_log.txt", 2);
  ASSERT_EQ(full.size(), 2u);
  EXPECT_EQ(full, rest);
  const Checkpoint a = load_checkpoint(root_ / "full" / "checkpoint.gfnc");
  const Checkpoint b = load_checkpoint(root_ / "rest" / "checkpoint.gfnc");
  for (std::size_t i = 0; i < a.params.size(); ++i) EXPECT_TRUE(a.params[i].bitwise_equal(b.params[i]));
}

TEST_F(Cli, ShippedConfigCarriesDefaultSchedule) {
  const TrainConfig t = TrainConfig::from_config(ConfigFile::load(std::string(GEOFNO_CONFIG_DIR) + "/geofno.ini"));
  EXPECT_EQ(t.epochs, 500u);
  EXPECT_EQ(t.initial_lr, 1e-3);
  EXPECT_EQ(t.lr_halving_period, 100u);
}

}  // namespace
}  // namespace geofno

#endif
