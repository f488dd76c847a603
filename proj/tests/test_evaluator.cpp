#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "assembly/evaluator.hpp"

using namespace assembly;

namespace {

const std::vector<Sample>& dataset() {
  static const auto ds = make_dataset(synthetic_manifest(), GenConfig{}, TemplateSet::load(default_template_path())).samples;
  return ds;
}

std::map<std::string, std::string> gold_predictions(const std::vector<Sample>& ds) {
  std::map<std::string, std::string> p;
  for (const auto& s : ds) p[s.sample_id] = serialize_timeline(s.output);
  return p;
}

// Per-task accuracies of the specialist models, in permille, in task index
// order.
constexpr std::array<int, 8> kDiagonalPermille = {992, 988, 1000, 988, 713, 700, 696, 263};

RoutingSpec diagonal_spec(const TaskMatrix<double>& routing) {
  RoutingSpec s;
  for (std::size_t t = 0; t < kTaskCount; ++t) s.accuracy[t][t] = kDiagonalPermille[t] / 1000.0;
  s.routing = routing;
  return s;
}

}  // namespace

TEST(ExactMatch, Cases) {
  const Timeline ab{AssetId("0001"), AssetId("0002")};
  const Timeline ba{AssetId("0002"), AssetId("0001")};
  const Timeline a{AssetId("0001")};
  EXPECT_TRUE(exact_match(ab, ab));
  EXPECT_FALSE(exact_match(ab, ba));
  EXPECT_FALSE(exact_match(a, ab));
  EXPECT_TRUE(exact_match(Timeline{}, Timeline{}));
}

TEST(Score, GoldSelfPredictionsPerfect) {
  const auto r = score(gold_predictions(dataset()), dataset());
  EXPECT_EQ(r.overall.correct, 640u);
  EXPECT_EQ(r.overall.total, 640u);
  EXPECT_DOUBLE_EQ(r.overall.fraction(), 1.0);
  EXPECT_EQ(r.per_task.size(), 8u);
  EXPECT_EQ(r.per_cue.at("semantic").total, 320u);
  EXPECT_TRUE(r.failures.empty());
}

TEST(Score, FailureReasons) {
  auto p = gold_predictions(dataset());
  const auto& s0 = dataset()[0];
  const auto& s1 = dataset()[1];
  const auto& s2 = dataset()[2];
  auto reversed = s0.output;
  std::reverse(reversed.begin(), reversed.end());
  p[s0.sample_id] = serialize_timeline(reversed);
  p[s1.sample_id] = "a mushroom";
  p[s2.sample_id] = serialize_timeline(Timeline(s2.output.begin(), s2.output.end() - 1));
  p.erase(dataset()[3].sample_id);
  const auto r = score(p, dataset());
  EXPECT_EQ(r.overall.correct, 636u);
  ASSERT_EQ(r.failures.size(), 4u);
  std::map<std::string, FailureReason> by_id;
  for (const auto& f : r.failures) by_id[f.sample_id] = f.reason;
  EXPECT_EQ(by_id.at(s0.sample_id), FailureReason::Mismatch);
  EXPECT_EQ(by_id.at(s1.sample_id), FailureReason::ParseError);
  EXPECT_EQ(by_id.at(s2.sample_id), FailureReason::LengthMismatch);
  EXPECT_EQ(by_id.at(dataset()[3].sample_id), FailureReason::ParseError);
}

TEST(Score, IdsOutsideCollectionAreMismatches) {
  auto p = gold_predictions(dataset());
  const auto& s = dataset()[5];
  Timeline t = s.output;
  for (std::size_t n = 0; n < kIdSpace; ++n) {
    auto id = AssetId::from_number(n);
    if (!s.collection.contains(id)) {
      t[0] = id;
      break;
    }
  }
  p[s.sample_id] = serialize_timeline(t);
  const auto r = score(p, dataset());
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].reason, FailureReason::Mismatch);
}

TEST(Score, UnknownSampleIsEvalError) {
  auto p = gold_predictions(dataset());
  p["no-such-sample"] = "{}";
  try {
    score(p, dataset());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Eval);
  }
}

TEST(Score, StrictVersusLenient) {
  auto p = gold_predictions(dataset());
  const auto& s = dataset()[0];
  p[s.sample_id] = "Answer: " + serialize_timeline(s.output);
  EXPECT_EQ(score(p, dataset(), Strictness::Lenient).overall.correct, 640u);
  EXPECT_EQ(score(p, dataset(), Strictness::Strict).overall.correct, 639u);
}

TEST(Report, TableCsvJson) {
  auto p = gold_predictions(dataset());
  p[dataset()[0].sample_id] = "nope";
  const auto r = score(p, dataset());
  const auto table = render_table(r);
  EXPECT_NE(table.find("Ins."), std::string::npos);
  EXPECT_NE(table.find("Positional"), std::string::npos);
  EXPECT_NE(table.find("98.8"), std::string::npos);  // 79/80 insert/positional
  EXPECT_NE(table.find("Overall"), std::string::npos);
  EXPECT_NE(table.find("99.8"), std::string::npos);  // 639/640
  const auto csv = report_to_csv(r);
  EXPECT_EQ(csv.rfind("bucket,correct,total,accuracy\noverall,639,640,0.998437\n", 0), 0u);  // Python "%.6f" % (639/640)
  const auto j = report_to_json(r);
  EXPECT_EQ(j["counts"]["overall"]["correct"], 639);
  EXPECT_EQ(j["failures"][0]["reason"], "parse_error");
  EXPECT_DOUBLE_EQ(j["per_task"]["insert/positional"].get<double>(), 79.0 / 80.0);
}

TEST(Predictions, JsonlAndDirectory) {
  const auto dir = std::filesystem::temp_directory_path() / "assembly_pred_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir / "per");
  {
    std::ofstream f(dir / "p.jsonl");
    f << R"({"sample_id":"a","response":"x"})" << "\n\n" << R"({"sample_id":"b","response":"{1: {}}"})" << "\n";
    std::ofstream(dir / "per" / "a.txt") << "hello";
    std::ofstream(dir / "per" / "b.json") << "{}";
    std::ofstream(dir / "per" / "ignored.md") << "";
  }
  const auto j = load_predictions(dir / "p.jsonl");
  EXPECT_EQ(j.size(), 2u);
  EXPECT_EQ(j.at("b"), "{1: {}}");
  const auto d = load_predictions(dir / "per");
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d.at("a"), "hello");
  {
    std::ofstream f(dir / "bad.jsonl");
    f << R"({"sample_id":"a","response":"x"})" << "\n" << R"({"sample_id":"a"})" << "\n";
  }
  try {
    load_predictions(dir / "bad.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.line, 2u);
  }
  std::filesystem::remove_all(dir);
}

TEST(Routing, OracleReturnsDiagonal) {
  const auto c = route_composite(diagonal_spec(oracle_routing()));
  for (std::size_t t = 0; t < kTaskCount; ++t) EXPECT_DOUBLE_EQ(c.per_task[t], kDiagonalPermille[t] / 1000.0);
  // Exact rational mean: 6340 / 8 = 792.5 permille.
  int sum = 0;
  for (int v : kDiagonalPermille) sum += v;
  EXPECT_EQ(sum, 6340);
  EXPECT_NEAR(c.average, sum / 8000.0, 1e-12);
}

TEST(Routing, UniformOverSpecialists) {
  RoutingSpec s;
  for (std::size_t m = 0; m < kTaskCount; ++m) {
    for (std::size_t t = 0; t < kTaskCount; ++t) s.accuracy[m][t] = m == t ? 1.0 : 0.0;
  }
  s.routing = uniform_routing();
  const auto c = route_composite(s);
  for (double v : c.per_task) EXPECT_NEAR(v, 0.125, 1e-12);
  EXPECT_NEAR(c.average, 0.125, 1e-12);
}

TEST(Routing, SpecErrors) {
  auto s = diagonal_spec(oracle_routing());
  s.routing[0][0] = 0.9;
  EXPECT_THROW(route_composite(s), Error);
  // Uniform routing needs the off-diagonal accuracies, which are unknown here.
  EXPECT_THROW(route_composite(diagonal_spec(uniform_routing())), Error);
  auto bad = diagonal_spec(oracle_routing());
  bad.accuracy[2][2] = 1.5;
  EXPECT_THROW(bad.validate(), Error);
  EXPECT_THROW(RoutingSpec::from_json(nlohmann::json::parse(R"({"accuracy":{"diagonal":[1,1]},"routing":"oracle"})")), Error);
  EXPECT_THROW(RoutingSpec::from_json(nlohmann::json::parse(R"({"routing":"oracle"})")), Error);
}

TEST(Routing, BundledSpecLoads) {
  const auto s = RoutingSpec::load(data_dir() / "routing" / "specialists_oracle.json");
  const auto c = route_composite(s);
  EXPECT_NEAR(c.average, 0.7925, 1e-12);
  const auto u = RoutingSpec::load(data_dir() / "routing" / "specialists_uniform.json");
  EXPECT_NEAR(route_composite(u).average, 0.125, 1e-12);
}

TEST(Routing, JsonMatrixWithNulls) {
  nlohmann::json acc = nlohmann::json::array();
  nlohmann::json routing = nlohmann::json::array();
  for (std::size_t i = 0; i < 8; ++i) {
    nlohmann::json row = nlohmann::json::array(), rrow = nlohmann::json::array();
    for (std::size_t j = 0; j < 8; ++j) {
      row.push_back(i == j ? nlohmann::json(0.5) : nlohmann::json(nullptr));
      rrow.push_back(i == j ? 1.0 : 0.0);
    }
    acc.push_back(row);
    routing.push_back(rrow);
  }
  const auto s = RoutingSpec::from_json({{"accuracy", acc}, {"routing", routing}});
  EXPECT_DOUBLE_EQ(route_composite(s).average, 0.5);
}

TEST(Routing, MonteCarloWithinThreeSigma) {
  // A mixed routing so each task draws across several models.
  RoutingSpec s;
  for (std::size_t m = 0; m < kTaskCount; ++m) {
    for (std::size_t t = 0; t < kTaskCount; ++t) s.accuracy[m][t] = 0.1 + 0.1 * static_cast<double>((m + 2 * t) % 9);
  }
  for (std::size_t t = 0; t < kTaskCount; ++t) {
    s.routing[t].fill(0.0);
    s.routing[t][t] = 0.7;
    s.routing[t][(t + 1) % kTaskCount] = 0.2;
    s.routing[t][(t + 3) % kTaskCount] = 0.1;
  }
  const auto closed = route_composite(s);
  const auto sim = simulate_routing(s, 100000, 3);
  EXPECT_LE(std::abs(sim.average - closed.average), 3 * sim.average_sigma);
  EXPECT_EQ(simulate_routing(s, 1000, 3).per_task, simulate_routing(s, 1000, 3).per_task);
}
