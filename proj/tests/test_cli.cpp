#include <gtest/gtest.h>

#include <filesystem>
#include <algorithm>
#include <sstream>

#include "dafd/cli.hpp"
#include "dafd/text_io.hpp"

namespace fs = std::filesystem;
using dafd::read_file;
using dafd::write_file;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = dafd::cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dafd_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

// Small synthetic corpus shared by the pipeline tests.
fs::path small_corpus() {
  static const fs::path dir = [] {
    const fs::path d = fresh_dir("corpus");
    write_file(d / "synth.cfg", "n_subjects = 5\ntrials_per_class = 4\n");
    const Outcome r = run({"synth", "--config", (d / "synth.cfg").string(), "--out", (d / "data").string()});
    EXPECT_EQ(r.code, 0) << r.err;
    return d / "data";
  }();
  return dir;
}

}  // namespace

TEST(Cli, UnknownSubcommandIsUsageError) {
  const Outcome r = run({"frobnicate"});
  EXPECT_EQ(r.code, dafd::cli::kExitUsage);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(run({}).code, dafd::cli::kExitUsage);
}

TEST(Cli, BadFlagValuesAreUsageErrors) {
  EXPECT_EQ(run({"train", "--epochs", "many"}).code, dafd::cli::kExitUsage);
  EXPECT_EQ(run({"pairs", "--scenario", "sideways"}).code, dafd::cli::kExitUsage);
  EXPECT_EQ(run({"train", "--data", small_corpus().string(), "--pair", "synth.WA", "--out",
                 fresh_dir("badpair").string()})
                .code,
            dafd::cli::kExitUsage);
}

TEST(Cli, HelpAndVersionSucceed) {
  EXPECT_EQ(run({"--help"}).code, 0);
  const Outcome v = run({"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_NE((v.out + v.err).find(dafd::cli::kVersion), std::string::npos);
}

TEST(Cli, PairsCrossConfigListsEight) {
  const Outcome r = run({"pairs", "--scenario", "cross_config"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(count_lines(r.out), 9u);
  EXPECT_NE(r.out.find("count=8\n"), std::string::npos);
  EXPECT_NE(r.out.find("upfall.RP:umafall.LP"), std::string::npos);
  EXPECT_EQ(count_lines(run({"pairs", "--scenario", "cross_position", "--dataset", "umafall"}).out), 13u);
}

TEST(Cli, GradcheckPasses) {
  const Outcome r = run({"gradcheck", "--seed", "7"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(r.out), 4u);
  EXPECT_NE(r.out.find("pass=1"), std::string::npos);
}

TEST(Cli, MissingFileIsFailure) {
  const fs::path dir = fresh_dir("missing");
  const Outcome r = run({"preprocess", "--data", (dir / "nope").string(), "--out", (dir / "out").string()});
  EXPECT_EQ(r.code, dafd::cli::kExitFailure);
  EXPECT_NE(r.err.find("nope"), std::string::npos);
  EXPECT_EQ(run({"report", "--data", (dir / "results.csv").string(), "--out", dir.string()}).code,
            dafd::cli::kExitFailure);
}

TEST(Cli, FlagsOverrideConfigFileOverDefaults) {
  const fs::path dir = fresh_dir("precedence");
  write_file(dir / "run.cfg", "lr = 0.01\nlambda = 0.31\nmax_epochs = 3\n");
  const Outcome r = run({"train", "--config", (dir / "run.cfg").string(), "--lr", "0.0001", "--epochs", "1", "--data",
                     small_corpus().string(), "--pair", "synth.WA:synth.RP", "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string prov = read_file(dir / "out" / "provenance.txt");
  EXPECT_NE(prov.find("lr = 0.0001\n"), std::string::npos) << prov;
  EXPECT_NE(prov.find("lambda = 0.31\n"), std::string::npos) << prov;
  EXPECT_NE(prov.find("max_epochs = 1\n"), std::string::npos) << prov;
  EXPECT_NE(prov.find("patience = 10\n"), std::string::npos) << prov;
  EXPECT_NE(prov.find("seed = 0\n"), std::string::npos) << prov;
  EXPECT_NE(prov.find("command = train\n"), std::string::npos) << prov;
}

TEST(Cli, UnknownConfigKeyIsUsageError) {
  const fs::path dir = fresh_dir("badkey");
  write_file(dir / "run.cfg", "colour = red\n");
  EXPECT_EQ(run({"train", "--config", (dir / "run.cfg").string(), "--data", small_corpus().string(), "--pair",
                 "synth.WA:synth.RP", "--out", (dir / "out").string()})
                .code,
            dafd::cli::kExitUsage);
}

TEST(Cli, PipelineRerunIsByteIdentical) {
  const auto pipeline = [](const fs::path& dir) {
    const std::string data = small_corpus().string();
    EXPECT_EQ(run({"preprocess", "--data", data, "--pair", "synth.WA:synth.RP", "--out", (dir / "pre").string()}).code,
              0);
    EXPECT_EQ(run({"train", "--data", data, "--pair", "synth.WA:synth.RP", "--epochs", "2", "--seed", "3", "--out",
                   (dir / "train").string()})
                  .code,
              0);
    EXPECT_EQ(run({"export-features", "--data", data, "--pair", "synth.WA:synth.RP", "--checkpoint",
                   (dir / "train" / "checkpoint.txt").string(), "--out", (dir / "feat").string()})
                  .code,
              0);
    EXPECT_EQ(run({"evalpairs", "--data", data, "--pair", "synth.WA:synth.RP", "--epochs", "1", "--out",
                   (dir / "eval").string()})
                  .code,
              0);
    EXPECT_EQ(run({"report", "--data", (dir / "eval").string(), "--out", (dir / "report").string()}).code, 0);
  };
  const fs::path a = fresh_dir("rerun_a"), b = fresh_dir("rerun_b");
  pipeline(a);
  pipeline(b);
  for (const char* file : {"pre/segments.csv", "train/checkpoint.txt", "train/history.csv", "feat/features.csv",
                           "eval/results.csv", "report/report.txt", "report/report.csv"}) {
    ASSERT_TRUE(fs::exists(a / file)) << file;
    EXPECT_EQ(read_file(a / file), read_file(b / file)) << file;
  }
  EXPECT_EQ(count_lines(read_file(a / "eval" / "results.csv")), 1u + 4u * 5u);
}
