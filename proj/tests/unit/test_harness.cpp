#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "mlmcq/errors.hpp"
#include "mlmcq/harness.hpp"

using namespace mlmcq;
using nlohmann::json;

namespace {

json small_finite_config() {
  return json{{"environment", {{"type", "finite"}, {"instance", "reference"}, {"gamma", 0.5}}},
              {"estimator", {{"type", "mlmc"}, {"approximator", "bg"}, {"r", 0.6}}},
              {"levels", {1, 2}},
              {"M", 2},
              {"runs", 5},
              {"seed", 17}};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("rmsre") {
  const std::vector<double> same = {2.0, 2.0};
  CHECK(rmsre(same, 2.0) == 0.0);
  const std::vector<double> one = {1.1};
  CHECK(rmsre(one, 1.0) == doctest::Approx(0.1));
  const std::vector<double> sym = {0.9, 1.1};
  CHECK(rmsre(sym, 1.0) == doctest::Approx(0.1));
  CHECK_THROWS_AS(rmsre(sym, 0.0), InvalidParameter);
  CHECK_THROWS_AS(rmsre({}, 1.0), InvalidParameter);
}

TEST_CASE("config parsing") {
  const auto cfg = config_from_json(small_finite_config());
  CHECK(cfg.environment == EnvironmentKind::Finite);
  CHECK(cfg.levels == std::vector<int>{1, 2});
  CHECK(cfg.approximator.kind == ApproximatorKind::BlanchetGlynn);
  CHECK(cfg.reference == ReferenceKind::ValueIteration);

  const auto lqg = config_from_json(json{{"environment", {{"d", 3}, {"gamma", 0.6}}},
                                          {"levels", 1}});
  CHECK(lqg.lqg.tau == doctest::Approx(2.5));
  CHECK(lqg.state == std::vector<double>(3, 0.0));
  CHECK(lqg.action == std::vector<double>(3, 1.0));
  CHECK(lqg.reference == ReferenceKind::Riccati);

  auto bad = small_finite_config();
  bad["runs"] = 0;
  CHECK_THROWS_AS(config_from_json(bad), InvalidParameter);
  bad = small_finite_config();
  bad["levels"] = json::array();
  CHECK_THROWS_AS(config_from_json(bad), InvalidParameter);
  bad = small_finite_config();
  bad["estimator"]["approximator"] = "nope";
  CHECK_THROWS_AS(config_from_json(bad), InvalidParameter);
  bad = small_finite_config();
  bad["estimator"] = {{"type", "simple_mc"}, {"approximator", "bg"}};
  CHECK_THROWS_AS(config_from_json(bad), InvalidParameter);
  bad = small_finite_config();
  bad["state"] = 7;
  CHECK_THROWS_AS(config_from_json(bad), InvalidParameter);
  CHECK_THROWS_AS(config_from_json(json{{"environment", {{"d", 2}}}, {"levels", 1},
                                        {"state", {1.0, 2.0, 3.0}}}),
                  InvalidParameter);
}

TEST_CASE("level 0 returns the truncated initial guess") {
  auto j = small_finite_config();
  j["levels"] = {0};
  j["runs"] = 1;
  const auto records = run_experiment(config_from_json(j));
  REQUIRE(records.size() == 1);
  CHECK(records[0].estimate == doctest::Approx(1.0));
  CHECK(records[0].transitions + records[0].actions == 0);
}

TEST_CASE("same seed, same records; workers do not matter") {
  auto cfg = config_from_json(small_finite_config());
  const auto a = run_experiment(cfg);
  cfg.workers = 3;
  const auto b = run_experiment(cfg);
  REQUIRE(a.size() == 10);
  REQUIRE(b.size() == 10);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].run_id == b[i].run_id);
    CHECK(a[i].level == b[i].level);
    CHECK(a[i].estimate == b[i].estimate);
    CHECK(a[i].transitions == b[i].transitions);
    CHECK(a[i].actions == b[i].actions);
  }
  for (const auto& r : a) CHECK(r.transitions + r.actions > 0);
}

TEST_CASE("replicates draw from independent streams") {
  auto cfg = config_from_json(small_finite_config());
  const auto recs = run_experiment(cfg);
  // level 1 from a constant initial guess is deterministic; level 2 is not
  CHECK(recs[0].estimate == recs[1].estimate);
  CHECK(recs[5].estimate != recs[6].estimate);
  CHECK_FALSE(run_stream(17, 1, 0) == run_stream(17, 1, 1));
  CHECK_FALSE(run_stream(17, 1, 0) == run_stream(17, 2, 0));
}

TEST_CASE("levels past the depth cap are rejected up front") {
  auto j = small_finite_config();
  j["levels"] = {3};
  j["max_depth"] = 2;
  CHECK_THROWS_AS(run_experiment(config_from_json(j)), ResourceError);
}

TEST_CASE("per-run numeric failures are recorded, not thrown") {
  // costs overflow to inf one step from this state
  const json j = {{"environment", {{"d", 1}, {"gamma", 0.5}}},
                  {"estimator", {{"approximator", "mc"}, {"K", 2}}},
                  {"levels", {2}},
                  {"M", 2},
                  {"runs", 2},
                  {"state", 1e200},
                  {"reference", "none"}};
  const auto recs = run_experiment(config_from_json(j));
  REQUIRE(recs.size() == 2);
  for (const auto& r : recs) {
    CHECK(std::isnan(r.estimate));
    CHECK_FALSE(r.error.empty());
  }
  const json s = summary_json(recs, std::nullopt, json::object());
  CHECK(s["errors"].size() == 2);
  CHECK(s["levels"][0]["failed"] == 2);
}

TEST_CASE("CSV schema and round trip") {
  CHECK(std::string(kCsvHeader) == "run_id,level,estimate,wall_time_s,transitions,actions,seed");
  RunRecord r;
  r.run_id = 3;
  r.level = 2;
  r.estimate = 0.1;
  r.wall_time_s = 1.5;
  r.transitions = 10;
  r.actions = 20;
  r.seed = 9;
  const std::vector<RunRecord> one = {r};
  CHECK(records_to_csv(one) == std::string(kCsvHeader) +
                                   "\n3,2,0.10000000000000001,1.5,10,20,9\n");

  const auto recs = run_experiment(config_from_json(small_finite_config()));
  const auto back = records_from_csv(records_to_csv(recs));
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) CHECK(back[i] == recs[i]);
  CHECK_THROWS_AS(records_from_csv("a,b\n"), InvalidParameter);
  CHECK_THROWS_AS(records_from_csv(std::string(kCsvHeader) + "\n1,2,3\n"), InvalidParameter);
}

TEST_CASE("summary agrees with the CSV") {
  const auto cfg = config_from_json(small_finite_config());
  const auto recs = run_experiment(cfg);
  const auto ref = experiment_reference(cfg);
  REQUIRE(ref);
  const json s = summary_json(recs, ref, cfg.echo);
  CHECK(s["total_runs"] == 10);
  const auto parsed = records_from_csv(records_to_csv(recs));
  for (const auto& lvl : s["levels"]) {
    std::vector<double> est;
    double ledger = 0.0;
    for (const auto& r : parsed) {
      if (r.level != lvl["level"].get<int>()) continue;
      est.push_back(r.estimate);
      ledger += double(r.transitions + r.actions);
    }
    CHECK(lvl["rmsre"].get<double>() == doctest::Approx(rmsre(est, *ref)).epsilon(1e-15));
    CHECK(lvl["mean_total"].get<double>() == ledger / est.size());
  }
}

TEST_CASE("emit_results writes both files") {
  const auto dir = std::filesystem::temp_directory_path() / "mlmcq_emit_test";
  std::filesystem::remove_all(dir);
  const std::vector<RunRecord> none;
  emit_results(dir, none, summary_json(none, std::nullopt, json::object()));
  CHECK(slurp(dir / "runs.csv") == std::string(kCsvHeader) + "\n");
  const json s = json::parse(slurp(dir / "summary.json"));
  CHECK(s["total_runs"] == 0);
  CHECK(s["levels"].empty());
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(emit_results("/proc/mlmcq/nope", none, json::object()), IoError);
}
