#include <gtest/gtest.h>

#include <unistd.h>

#include "process.hpp"
#include "vcb/vcb.hpp"

namespace fs = std::filesystem;

namespace {

proc::Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), VCB_CLI_PATH);
  return proc::run(args);
}

// A small synthetic set shared by the tests, generated once.
class Cli : public ::testing::Test {
 protected:
  static fs::path root() { return fs::temp_directory_path() / ("vcb_cli_test_" + std::to_string(::getpid())); }
  static fs::path data() { return root() / "data"; }
  static std::string conf() { return (data() / "pipeline.conf").string(); }

  static void SetUpTestSuite() {
    fs::remove_all(root());
    const auto r = run_cli({"synth", "-o", data().string(), "-s", "synth_concepts=20", "-s", "synth_classes=4", "-s",
                        "synth_concept_images=600", "-s", "synth_train_per_class=20", "-s", "synth_test_per_class=10"});
    ASSERT_EQ(r.status, 0) << r.output;
  }
  static void TearDownTestSuite() { fs::remove_all(root()); }

  // Fresh run directory per test.
  fs::path out(const std::string& name) const { return root() / name; }
};

}  // namespace

TEST_F(Cli, VersionHelpAndUsageErrors) {
  const auto v = run_cli({"--version"});
  EXPECT_EQ(v.status, 0);
  EXPECT_NE(v.output.find("1.0.0"), std::string::npos);
  EXPECT_EQ(run_cli({"--help"}).status, 0);
  EXPECT_NE(run_cli({}).status, 0);
  EXPECT_NE(run_cli({"no-such-command"}).status, 0);
  const auto bad = run_cli({"build-vocab", "-c", conf(), "-s", "colour=blue"});
  EXPECT_EQ(bad.status, 1);
  EXPECT_NE(bad.output.find("unknown key 'colour'"), std::string::npos) << bad.output;
  const auto range = run_cli({"build-vocab", "-c", conf(), "-s", "alpha=2"});
  EXPECT_EQ(range.status, 1);
}

TEST_F(Cli, PrintConfigRoundTrips) {
  const auto r = run_cli({"build-vocab", "-c", conf(), "--print-config"});
  ASSERT_EQ(r.status, 0);
  const auto parsed = vcb::decode_config(r.output);
  EXPECT_EQ(parsed.raw("k_clusters"), "8");
  EXPECT_EQ(vcb::encode_config(parsed), r.output);
}

TEST_F(Cli, MissingInputWritesNothing) {
  const auto dir = out("missing");
  const auto r = run_cli({"build-vocab", "-c", conf(), "-o", dir.string(), "-s", "annotations=nowhere.jsonl"});
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.output.find("nowhere.jsonl"), std::string::npos) << r.output;
  EXPECT_TRUE(!fs::exists(dir) || fs::is_empty(dir));

  // a later stage without its upstream artifacts fails the same way
  const auto t = run_cli({"train-concepts", "-c", conf(), "-o", dir.string()});
  EXPECT_NE(t.status, 0);
  EXPECT_TRUE(!fs::exists(dir) || fs::is_empty(dir));
}

TEST_F(Cli, EmptyVocabularyWarnsAndSucceeds) {
  const auto dir = out("empty");
  const auto r = run_cli({"build-vocab", "-c", conf(), "-o", dir.string(), "-s", "min_count=100000"});
  EXPECT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("warning: vocabulary is empty"), std::string::npos) << r.output;
  EXPECT_TRUE(fs::exists(dir / "vocab.tsv"));
  EXPECT_TRUE(fs::exists(dir / "manifest_build-vocab.json"));
}

TEST_F(Cli, PipelineManifestsAndDimensionMismatch) {
  const auto dir = out("pipeline");
  for (const char* cmd : {"build-vocab", "train-concepts", "train-target", "evaluate", "keywords"}) {
    const auto r = run_cli({cmd, "-c", conf(), "-o", dir.string()});
    ASSERT_EQ(r.status, 0) << cmd << ": " << r.output;
  }
  const auto manifest = nlohmann::json::parse(proc::slurp(dir / "manifest_evaluate.json"));
  EXPECT_EQ(manifest.at("command"), "evaluate");
  EXPECT_FALSE(manifest.at("config").contains("threads"));
  for (const auto& o : manifest.at("outputs")) {
    const auto bytes = proc::slurp(dir / o.at("file").get<std::string>());
    EXPECT_EQ(o.at("fnv1a64").get<std::string>(), vcb::hex64(vcb::fnv1a64(bytes)));
  }

  const auto other = out("narrow");
  ASSERT_EQ(run_cli({"synth", "-o", other.string(), "-s", "synth_feature_dim=32", "-s", "synth_concepts=20", "-s",
                 "synth_classes=4", "-s", "synth_concept_images=200", "-s", "synth_train_per_class=5", "-s",
                 "synth_test_per_class=5"})
                .status,
            0);
  const auto before = proc::slurp(dir / "report.json");
  const auto r = run_cli({"evaluate", "-c", conf(), "-o", dir.string(), "-s",
                      "features=" + (other / "features.vcbf").string()});
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("32"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("64"), std::string::npos) << r.output;
  EXPECT_EQ(proc::slurp(dir / "report.json"), before);
}
