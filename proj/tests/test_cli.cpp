#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "assembly/manifest.hpp"
#include "assembly/prompt_io.hpp"

using namespace assembly;
namespace fs = std::filesystem;

namespace {

const std::string kCli = ASSEMBLY_BENCH_CLI;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("assembly_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Exit status of the CLI; stdout goes to out.txt, stderr to err.txt.
  int run(const std::string& args, const std::string& env = "") {
    const auto cmd = env + " '" + kCli + "' " + args + " > '" + (dir_ / "out.txt").string() + "' 2> '" +
                     (dir_ / "err.txt").string() + "'";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }
  std::string read(const fs::path& p) const {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }
  std::string out() const { return read(dir_ / "out.txt"); }
  std::string err() const { return read(dir_ / "err.txt"); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_F(Cli, GenDefaultsAndZero) {
  ASSERT_EQ(run("-q gen --out " + path("d.jsonl")), 0) << err();
  EXPECT_EQ(lines(read(path("d.jsonl"))), 640u);
  ASSERT_EQ(run("gen --per-task 0 --out " + path("empty.jsonl")), 0) << err();
  EXPECT_TRUE(fs::exists(path("empty.jsonl")));
  EXPECT_EQ(fs::file_size(path("empty.jsonl")), 0u);
}

TEST_F(Cli, GenErrorsAndUsage) {
  EXPECT_EQ(run("gen --manifest /nonexistent/m.jsonl --out " + path("x.jsonl")), 1);
  EXPECT_NE(err().find("error"), std::string::npos);
  EXPECT_EQ(run("gen --length 1"), 2);
  EXPECT_EQ(run("gen --length-range 2:30"), 2);
  EXPECT_EQ(run("gen --split nope"), 2);
  EXPECT_EQ(run("gen --bogus"), 2);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("gen --length 4 --length-range 2:5"), 2);
  EXPECT_EQ(run("gen --per-task 1 --out " + path("y.jsonl"), "ASSEMBLY_BENCH_TEMPLATES=/nonexistent/t.json"), 1);
}

TEST_F(Cli, SeedReproducible) {
  ASSERT_EQ(run("-q --seed 17 gen --per-task 10 --length-range 2:19 --out " + path("a.jsonl")), 0);
  ASSERT_EQ(run("-q --seed 17 gen --per-task 10 --length-range 2:19 --threads 3 --out " + path("b.jsonl")), 0);
  ASSERT_EQ(run("-q --seed 18 gen --per-task 10 --length-range 2:19 --out " + path("c.jsonl")), 0);
  EXPECT_EQ(read(path("a.jsonl")), read(path("b.jsonl")));
  EXPECT_NE(read(path("a.jsonl")), read(path("c.jsonl")));
}

TEST_F(Cli, ExecModes) {
  ASSERT_EQ(run("-q gen --per-task 2 --out " + path("d.jsonl")), 0);
  EXPECT_EQ(run("exec --dataset " + path("d.jsonl") + " --all"), 0);
  EXPECT_NE(out().find("agreement: 16/16 (100.0%)"), std::string::npos) << out();
  ASSERT_EQ(run("exec --dataset " + path("d.jsonl") + " --sample swap-semantic-0001"), 0);
  EXPECT_EQ(lines(out()), 1u);
  EXPECT_EQ(out().rfind("swap-semantic-0001\t", 0), 0u);
  EXPECT_EQ(run("exec --dataset " + path("d.jsonl")), 2);
  EXPECT_EQ(run("exec --dataset " + path("d.jsonl") + " --sample nope"), 1);

  // Tamper with one gold output so it disagrees with the executor.
  auto samples = read_dataset(fs::path(path("d.jsonl")));
  std::swap(samples[0].output[0], samples[0].output[1]);
  write_dataset(samples, fs::path(path("bad.jsonl")));
  const auto id = samples[0].sample_id;
  EXPECT_EQ(run("exec --dataset " + path("bad.jsonl") + " --sample " + id), 0);
  EXPECT_EQ(run("exec --dataset " + path("bad.jsonl") + " --sample " + id + " --strict"), 1);
  EXPECT_EQ(run("exec --dataset " + path("bad.jsonl") + " --all"), 1);

  std::ofstream(path("corrupt.jsonl")) << "{\"sample_id\": 1}\n";
  EXPECT_EQ(run("exec --dataset " + path("corrupt.jsonl") + " --all"), 1);
  EXPECT_NE(err().find("SchemaError"), std::string::npos) << err();
}

TEST_F(Cli, PromptWritesOneFilePerSample) {
  ASSERT_EQ(run("-q gen --per-task 1 --out " + path("d.jsonl")), 0);
  ASSERT_EQ(run("prompt --dataset " + path("d.jsonl") + " --mode caption --out-dir " + path("p")), 0) << err();
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(path("p"))) {
    ++files;
    EXPECT_EQ(read(e.path()).find("<VisualHere>"), std::string::npos);
  }
  EXPECT_EQ(files, 8u);
  ASSERT_EQ(run("prompt --dataset " + path("d.jsonl") + " --sample swap-positional-0000"), 0);
  EXPECT_EQ(split_on_placeholder(out()).size(), 21u);
  EXPECT_EQ(run("prompt --dataset " + path("d.jsonl") + " --mode pictures --out-dir " + path("q")), 2);
}

TEST_F(Cli, EvalOnGoldAndReports) {
  ASSERT_EQ(run("-q gen --per-task 5 --out " + path("d.jsonl")), 0);
  ASSERT_EQ(run("-q exec --dataset " + path("d.jsonl") + " --all --predictions-out " + path("p.jsonl")), 0);
  ASSERT_EQ(run("eval --dataset " + path("d.jsonl") + " --predictions " + path("p.jsonl") + " --report " +
                path("r.json") + " --csv " + path("r.csv")),
            0)
      << err();
  EXPECT_NE(out().find("Overall        100.0"), std::string::npos) << out();
  const auto report = nlohmann::json::parse(read(path("r.json")));
  EXPECT_EQ(report["overall"], 1.0);
  EXPECT_EQ(read(path("r.csv")).rfind("bucket,correct,total,accuracy\noverall,40,40,", 0), 0u);
  EXPECT_EQ(run("eval --dataset " + path("d.jsonl") + " --predictions " + path("p.jsonl") + " --strict"), 0);
  EXPECT_EQ(run("eval --dataset " + path("d.jsonl") + " --predictions " + path("p.jsonl") + " --strict --lenient"), 2);

  std::ofstream(path("unknown.jsonl")) << R"({"sample_id":"ghost","response":"{}"})" << "\n";
  EXPECT_EQ(run("eval --dataset " + path("d.jsonl") + " --predictions " + path("unknown.jsonl")), 1);
}

TEST_F(Cli, RouteSim) {
  ASSERT_EQ(run("route-sim --trials 0"), 0) << err();
  EXPECT_NE(out().find("avg                         79.2"), std::string::npos) << out();
  ASSERT_EQ(run("route-sim --trials 2000 --json"), 0);
  const auto j = nlohmann::json::parse(out());
  EXPECT_NEAR(j["average"].get<double>(), 0.7925, 1e-12);
  EXPECT_EQ(j["simulation"]["trials"], 2000);
  std::ofstream(path("bad.json")) << R"({"accuracy":{"diagonal":[1,1,1,1,1,1,1,1]},"routing":[[0.5]]})";
  EXPECT_EQ(run("route-sim --spec " + path("bad.json")), 1);
  EXPECT_NE(err().find("SpecError"), std::string::npos);
}

TEST_F(Cli, SynthManifestMatchesBundled) {
  ASSERT_EQ(run("-q synth-manifest --out " + path("m.jsonl")), 0);
  EXPECT_EQ(read(path("m.jsonl")), read(bundled_manifest_path()));
  ASSERT_EQ(run("-q --seed 5 synth-manifest --sequences 3 --length 4"), 0);
  EXPECT_EQ(lines(out()), 3u);
}
