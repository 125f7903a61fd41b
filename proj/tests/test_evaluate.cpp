#include <gtest/gtest.h>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmtrack/evaluate.hpp"

namespace {

using namespace mmtrack;

std::string tempFile(const std::string& stem) {
  static std::atomic<int> counter{0};
  return testing::TempDir() + stem + "." + std::to_string(::getpid()) + "." +
         std::to_string(counter.fetch_add(1));
}

void writeFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  ASSERT_TRUE(out) << path;
  out << text;
}

TruthRow truthAt(int64_t tick, const std::string& actor, double x, double y,
                 StatusLabel status = StatusLabel::Standing) {
  TruthRow r;
  r.tick = tick;
  r.actor = actor;
  r.x = x;
  r.y = y;
  r.z = 1.0;
  r.status = status;
  return r;
}

PredictionRow predAt(int64_t tick, int id, double x, double y,
                     StatusLabel status = StatusLabel::Standing) {
  PredictionRow r;
  r.tick = tick;
  r.track_id = id;
  r.x = x;
  r.y = y;
  r.z = 1.0;
  r.state = "confirmed";
  r.status = status;
  return r;
}

// Exhaustive maximum matching for small graphs: the reference the production
// augmenting-path search must agree with.
int bruteBestMatching(const std::vector<std::vector<bool>>& feasible) {
  const int nt = static_cast<int>(feasible.size());
  const int np = nt == 0 ? 0 : static_cast<int>(feasible[0].size());
  std::function<int(int, unsigned)> best = [&](int t, unsigned used) -> int {
    if (t == nt) return 0;
    int out = best(t + 1, used);  // leave row t unmatched
    for (int p = 0; p < np; ++p)
      if (feasible[t][p] && !(used & (1u << p)))
        out = std::max(out, 1 + best(t + 1, used | (1u << p)));
    return out;
  };
  return best(0, 0u);
}

TEST(Evaluate, LoadTruthParsesRowsAndFlagsBadLines) {
  const std::string path = tempFile("truth.csv");
  writeFile(path,
            "tick,actor,x,y,z,status\n"
            "0,res,0.100000,2.000000,1.032500,standing\n"
            "\n"
            "1,res,-0.500000,2.100000,0.736600,sitting\n");
  const auto rows = loadTruth(path);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].tick, 0);
  EXPECT_EQ(rows[0].actor, "res");
  EXPECT_DOUBLE_EQ(rows[0].x, 0.1);
  EXPECT_DOUBLE_EQ(rows[0].z, 1.0325);
  EXPECT_EQ(rows[0].status, StatusLabel::Standing);
  EXPECT_EQ(rows[1].status, StatusLabel::Sitting);
  EXPECT_DOUBLE_EQ(rows[1].x, -0.5);

  writeFile(path, "tick,actor,x,y,z,status\n0,res,1.0,2.0,1.0\n");
  try {
    loadTruth(path);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }

  writeFile(path,
            "tick,actor,x,y,z,status\n"
            "0,res,1.0,2.0,1.0,standing\n"
            "1,res,1.0,2.0,1.0,floating\n");
  try {
    loadTruth(path);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }

  EXPECT_THROW(loadTruth("/nonexistent-dir-for-test/truth.csv"), IoError);
  std::remove(path.c_str());
}

TEST(Evaluate, LoadTrajectoriesParsesRows) {
  const std::string path = tempFile("traj.csv");
  writeFile(path,
            "tick,track,x,y,z,state,status\n"
            "5,2,0.250000,1.750000,1.100000,confirmed,standing\n"
            "6,2,0.300000,1.800000,0.300000,confirmed,fallen\n");
  const auto rows = loadTrajectories(path);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].tick, 5);
  EXPECT_EQ(rows[0].track_id, 2);
  EXPECT_EQ(rows[0].state, "confirmed");
  EXPECT_EQ(rows[1].status, StatusLabel::Fallen);

  writeFile(path, "h\n5,2,0.25,1.75,1.1,confirmed\n");  // 6 of 7 fields
  EXPECT_THROW(loadTrajectories(path), ParseError);
  EXPECT_THROW(loadTrajectories("/nonexistent-dir-for-test/t.csv"), IoError);
  std::remove(path.c_str());
}

TEST(Evaluate, MatchFeasibilityHandCases) {
  const EvalConfig cfg;
  auto feasible = [&](double dx, double dy) {
    return matchFeasible(truthAt(0, "a", 0.0, 2.0),
                         predAt(0, 1, 0.0 + dx, 2.0 + dy), cfg);
  };

  EXPECT_TRUE(feasible(0.0, 0.0));
  // 0.125 off on one axis: overlap (0.375 * 0.5) / 0.25 = 0.75.
  EXPECT_TRUE(feasible(0.125, 0.0));
  EXPECT_TRUE(feasible(0.0, -0.125));
  // Diagonal 0.18: centroid distance 0.2546 exceeds 0.25.
  EXPECT_FALSE(feasible(0.18, 0.18));
  // 0.24 off: distance fine, but overlap 0.52 is under 0.7.
  EXPECT_FALSE(feasible(0.24, 0.0));
  // Diagonal 0.10: distance 0.141 fine, overlap 0.64 fails.
  EXPECT_FALSE(feasible(0.10, 0.10));
  // Diagonal 0.07: overlap (0.43^2) / 0.25 = 0.7396 passes.
  EXPECT_TRUE(feasible(0.07, 0.07));

  // Height never enters the footprint test.
  TruthRow t = truthAt(0, "a", 0.0, 2.0);
  PredictionRow p = predAt(0, 1, 0.0, 2.0);
  p.z = 9.0;
  EXPECT_TRUE(matchFeasible(t, p, cfg));
}

TEST(Evaluate, MatchingSizeAgreesWithExhaustiveSearch) {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const int nt = std::uniform_int_distribution<int>(0, 4)(rng);
    const int np = std::uniform_int_distribution<int>(0, 5)(rng);
    std::vector<std::vector<bool>> feasible(nt, std::vector<bool>(np));
    for (int i = 0; i < nt; ++i)
      for (int j = 0; j < np; ++j)
        feasible[i][j] = std::bernoulli_distribution(0.35)(rng);

    std::vector<int> mt, mp;
    const int got = detail::maxMatching(feasible, mt, mp);
    EXPECT_EQ(got, bruteBestMatching(feasible)) << "trial " << trial;

    // The reported assignment must be a consistent matching of that size.
    int listed = 0;
    for (int i = 0; i < nt; ++i)
      if (mt[i] >= 0) {
        ++listed;
        EXPECT_TRUE(feasible[i][mt[i]]);
        EXPECT_EQ(mp[mt[i]], i);
      }
    EXPECT_EQ(listed, got);
  }
}

TEST(Evaluate, AssignmentWithinTickIsOptimalNotFirstComeFirstServed) {
  // Truth 1 can pair with either prediction; truth 2 only with the first.
  // A greedy scan would strand truth 2; the augmenting path reroutes.
  const std::vector<TruthRow> truth = {truthAt(0, "a", 0.0, 0.5),
                                       truthAt(0, "b", 0.2, 0.5)};
  const std::vector<PredictionRow> preds = {predAt(0, 1, 0.06, 0.5),
                                            predAt(0, 2, -0.08, 0.5)};
  const EvalResult res = evaluate(truth, preds);
  EXPECT_EQ(res.true_positives, 2);
  EXPECT_EQ(res.false_negatives, 0);
  EXPECT_EQ(res.false_positives, 0);
  EXPECT_DOUBLE_EQ(res.sensitivity, 1.0);
  EXPECT_DOUBLE_EQ(res.precision, 1.0);
}

TEST(Evaluate, CountsAndConfusionAcrossTicks) {
  std::vector<TruthRow> truth;
  std::vector<PredictionRow> preds;

  // Tick 0: clean hit, standing vs standing.
  truth.push_back(truthAt(0, "res", 0.0, 2.0, StatusLabel::Standing));
  preds.push_back(predAt(0, 1, 0.05, 2.0, StatusLabel::Standing));
  // Tick 1: the only prediction is far away; one miss, one false alarm.
  truth.push_back(truthAt(1, "res", 0.0, 2.0, StatusLabel::Standing));
  preds.push_back(predAt(1, 1, 1.5, 3.5, StatusLabel::Standing));
  // Tick 2: guest matched but mislabeled, resident missed entirely.
  truth.push_back(truthAt(2, "res", 0.0, 2.0, StatusLabel::Standing));
  truth.push_back(truthAt(2, "guest", 1.0, 3.0, StatusLabel::Sitting));
  preds.push_back(predAt(2, 2, 1.05, 3.0, StatusLabel::Fallen));

  const EvalResult res = evaluate(truth, preds);
  EXPECT_EQ(res.truth_ticks, 3);
  EXPECT_EQ(res.truth_instances, 4);
  EXPECT_EQ(res.predicted_instances, 3);
  EXPECT_EQ(res.true_positives, 2);
  EXPECT_EQ(res.false_negatives, 2);
  EXPECT_EQ(res.false_positives, 1);
  EXPECT_DOUBLE_EQ(res.sensitivity, 0.5);
  EXPECT_DOUBLE_EQ(res.precision, 2.0 / 3.0);

  EXPECT_EQ(res.confusion[0][0], 1);  // standing seen as standing
  EXPECT_EQ(res.confusion[1][2], 1);  // sitting seen as fallen
  EXPECT_DOUBLE_EQ(res.status_accuracy, 0.5);

  ASSERT_EQ(res.per_actor_sensitivity.size(), 2u);
  EXPECT_DOUBLE_EQ(res.per_actor_sensitivity.at("res"), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(res.per_actor_sensitivity.at("guest"), 1.0);
}

TEST(Evaluate, DegenerateRatiosDefaultToOne) {
  const std::vector<TruthRow> truth = {truthAt(0, "a", 0.0, 2.0)};
  const EvalResult res = evaluate(truth, {});
  EXPECT_EQ(res.true_positives, 0);
  EXPECT_DOUBLE_EQ(res.sensitivity, 0.0);
  EXPECT_DOUBLE_EQ(res.precision, 1.0);       // nothing predicted
  EXPECT_DOUBLE_EQ(res.status_accuracy, 1.0); // nothing matched
}

TEST(Evaluate, AlignmentGuards) {
  EXPECT_THROW(evaluate({}, {}), AlignmentError);

  const std::vector<TruthRow> truth = {truthAt(5, "a", 0.0, 2.0)};
  const std::vector<PredictionRow> late = {predAt(10, 1, 0.0, 2.0)};
  try {
    evaluate(truth, late);
    FAIL() << "expected AlignmentError";
  } catch (const AlignmentError& e) {
    EXPECT_NE(std::string(e.what()).find("10"), std::string::npos);
  }
}

TEST(Evaluate, MetricsFileMirrorsResult) {
  const std::vector<TruthRow> truth = {
      truthAt(0, "a", 0.0, 2.0, StatusLabel::Fallen)};
  const std::vector<PredictionRow> preds = {
      predAt(0, 1, 0.0, 2.0, StatusLabel::Fallen)};
  const EvalResult res = evaluate(truth, preds);

  const std::string path = tempFile("metrics.json");
  writeMetrics(path, res);
  std::ifstream in(path);
  ASSERT_TRUE(in);
  json j;
  in >> j;

  EXPECT_EQ(j["truth_ticks"].get<int64_t>(), 1);
  EXPECT_EQ(j["true_positives"].get<int64_t>(), 1);
  EXPECT_EQ(j["false_negatives"].get<int64_t>(), 0);
  EXPECT_EQ(j["false_positives"].get<int64_t>(), 0);
  EXPECT_DOUBLE_EQ(j["sensitivity"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(j["precision"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(j["status_accuracy"].get<double>(), 1.0);
  ASSERT_TRUE(j["status_confusion"].is_array());
  ASSERT_EQ(j["status_confusion"].size(), 3u);
  EXPECT_EQ(j["status_confusion"][2][2].get<int64_t>(), 1);
  EXPECT_DOUBLE_EQ(j["per_actor_sensitivity"]["a"].get<double>(), 1.0);

  EXPECT_THROW(writeMetrics("/nonexistent-dir-for-test/m.json", res), IoError);
  std::remove(path.c_str());
}

TEST(Evaluate, FilePathEndToEnd) {
  const std::string truth_path = tempFile("truth-e2e.csv");
  const std::string traj_path = tempFile("traj-e2e.csv");
  writeFile(truth_path,
            "tick,actor,x,y,z,status\n"
            "0,a,0.000000,2.000000,1.032500,standing\n"
            "1,a,0.100000,2.000000,1.032500,standing\n");
  writeFile(traj_path,
            "tick,track,x,y,z,state,status\n"
            "0,3,0.020000,2.010000,1.000000,confirmed,standing\n"
            "1,3,0.120000,2.010000,1.000000,confirmed,standing\n");
  const EvalResult res = evaluateFiles(truth_path, traj_path);
  EXPECT_EQ(res.true_positives, 2);
  EXPECT_DOUBLE_EQ(res.sensitivity, 1.0);
  EXPECT_DOUBLE_EQ(res.status_accuracy, 1.0);
  std::remove(truth_path.c_str());
  std::remove(traj_path.c_str());
}

}  // namespace
