#pragma once

// Replicated experiment driver and result files.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlmcq/bellman.hpp"
#include "mlmcq/estimators.hpp"
#include "mlmcq/finite_mdp.hpp"
#include "mlmcq/lqg.hpp"

namespace mlmcq {

enum class EnvironmentKind { Lqg, Finite };
enum class EstimatorKind { SimpleMC, MLMC };
enum class ReferenceKind { Riccati, ValueIteration, None };

struct ExperimentConfig {
  EnvironmentKind environment = EnvironmentKind::Lqg;
  LqgProblem lqg;
  std::optional<FiniteMdp> finite;

  EstimatorKind estimator = EstimatorKind::MLMC;
  ApproximatorSpec approximator;
  std::vector<int> levels;
  int M = 1;
  int runs = 1;
  std::uint64_t seed = 0;
  int max_depth = 10;
  int workers = 1;

  // Query point. For finite MDPs only the first entry of each is used.
  std::vector<double> state;
  std::vector<double> action;

  ReferenceKind reference = ReferenceKind::None;
  // Explicit clamp; when empty the environment default applies (the value
  // range for finite MDPs, none for LQG).
  std::optional<Truncation> truncation;
  std::string output;

  nlohmann::json echo;  // the configuration as given, for the summary

  void validate() const;
};

/// Parses the JSON configuration. Throws InvalidParameter naming the field.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// LQG problem from an environment object: d, eps, gamma, optional tau and
/// optional A, B, R1, R2 overrides.
LqgProblem lqg_problem_from_json(const nlohmann::json& env);

struct RunRecord {
  std::int64_t run_id = 0;
  int level = 0;
  double estimate = 0.0;
  double wall_time_s = 0.0;
  std::uint64_t transitions = 0;
  std::uint64_t actions = 0;
  std::uint64_t seed = 0;
  std::string error;  // not serialized to CSV; empty on success

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// Stream of one replicate: RngStream(seed).child(level).child(replicate).
RngStream run_stream(std::uint64_t seed, int level, int replicate);

/// Reference value at the query point, if the config names one.
std::optional<double> experiment_reference(const ExperimentConfig& config);

/// Evaluates every (level, replicate) pair. Records come back ordered by
/// level then replicate whatever the worker count. Per-run failures are
/// stored in RunRecord::error with a NaN estimate.
std::vector<RunRecord> run_experiment(
    const ExperimentConfig& config,
    const std::function<void(const RunRecord&)>& on_done = {});

/// sqrt(mean(((x - ref) / ref)^2)). Throws for ref == 0 or empty input.
double rmsre(std::span<const double> estimates, double reference);

struct LevelSummary {
  int level = 0;
  std::size_t runs = 0;
  std::size_t failed = 0;
  double mean_estimate = 0.0;
  std::optional<double> rmsre;
  double mean_wall_time_s = 0.0;
  double mean_transitions = 0.0;
  double mean_actions = 0.0;
  double mean_total = 0.0;
};

/// Per-level aggregates in ascending level order; failed runs are excluded
/// from the means.
std::vector<LevelSummary> summarize(std::span<const RunRecord> records,
                                    std::optional<double> reference);

nlohmann::json summary_json(std::span<const RunRecord> records,
                            std::optional<double> reference, const nlohmann::json& config_echo);

inline constexpr const char* kCsvHeader =
    "run_id,level,estimate,wall_time_s,transitions,actions,seed";

std::string records_to_csv(std::span<const RunRecord> records);
std::vector<RunRecord> records_from_csv(const std::string& text);

/// Writes runs.csv and summary.json into `dir`, creating it if needed.
void emit_results(const std::filesystem::path& dir, std::span<const RunRecord> records,
                  const nlohmann::json& summary);

}  // namespace mlmcq
