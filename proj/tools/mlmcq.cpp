// mlmcq: schedules, experiment runs, Riccati references and acceptance checks.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlmcq/errors.hpp"
#include "mlmcq/harness.hpp"
#include "mlmcq/hyperparams.hpp"
#include "mlmcq/lqg.hpp"
#include "mlmcq/mdp.hpp"
#include "mlmcq/verify.hpp"

using nlohmann::json;
using namespace mlmcq;

namespace {

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

int report_error(std::string_view kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
  return 1;
}

struct PlanArgs {
  double epsilon = 0.1;
  double gamma = 0.5;
  double tau = 1.0;
  double c_min = 0.0;
  double c_max = 1.0;
  double r = 0.6;
  std::optional<double> L_bg;
  std::optional<double> e0;
};

json plan(const PlanArgs& a) {
  const ValueBounds vb = derive_bounds(a.c_min, a.c_max, a.gamma);
  const double e0 = a.e0.value_or(0.5 * (vb.beta - vb.alpha));
  const PlainConstants pc = plain_constants(vb.alpha, vb.beta, a.tau, a.gamma);
  json out;
  out["alpha"] = vb.alpha;
  out["beta"] = vb.beta;
  out["e0"] = e0;
  out["L"] = pc.L;
  out["gamma_L"] = pc.gamma_L;
  out["contracts"] = pc.contracts;
  if (!pc.contracts) {
    out["warning"] = "gamma L >= 1: the plain Monte Carlo schedules do not apply";
    return out;
  }
  const auto sm = simple_mc_schedule(a.epsilon, a.gamma, vb.alpha, vb.beta, a.tau, e0);
  out["simple_mc"] = {
      {"n", sm.n}, {"M", sm.M}, {"K", sm.K},
      {"bound", simple_mc_error_bound(a.gamma, vb.alpha, vb.beta, a.tau, sm.n, sm.M, sm.K, e0)}};
  const auto mb = mlmcb_schedule(a.epsilon, a.gamma, vb.alpha, vb.beta, a.tau);
  out["mlmcb"] = {
      {"n", mb.n},
      {"M", mb.M0},
      {"K", mb.K},
      {"Lambda", mb.Lambda},
      {"cost_bound", finite_or_null(mb.cost_bound)},
      {"kappa", mb.kappa},
      {"bound", mlmcb_error_bound(a.gamma, vb.alpha, vb.beta, a.tau, mb.n, mb.M0, mb.K, e0)}};

  json bg;
  double L_bg = 0.0;
  if (a.L_bg) {
    L_bg = *a.L_bg;
  } else {
    const auto diag = bg_lipschitz_diagnostic(vb.alpha, vb.beta, a.tau, a.r);
    L_bg = diag.L_bg;
    bg["L_bg_estimated"] = true;
  }
  bg["L_bg"] = L_bg;
  bg["r"] = a.r;
  if (a.gamma * L_bg < 1.0) {
    const auto mu = mlmcu_schedule(a.epsilon, a.gamma, vb.alpha, vb.beta, a.tau, a.r, L_bg);
    bg["n"] = mu.n;
    bg["M"] = mu.M0;
    bg["Lambda"] = mu.Lambda;
    bg["expected_cost_bound"] = finite_or_null(mu.expected_cost_bound);
    bg["kappa"] = mu.kappa;
    bg["bound"] = mlmcu_error_bound(a.gamma, vb.alpha, vb.beta, L_bg, mu.n, mu.M0, e0);
    if (mu.r_outside_stable_range) bg["warning"] = "r >= 3/4: estimator variance may be unstable";
  } else {
    bg["warning"] = "gamma L_bg >= 1: no schedule";
  }
  out["mlmcu"] = bg;
  return out;
}

struct RunOverrides {
  std::optional<double> gamma, tau, r;
  std::optional<std::string> estimator, out;
  std::optional<int> K, M, runs, workers;
  std::optional<std::uint64_t> seed;
  std::vector<int> levels;
};

void apply_overrides(json& j, const RunOverrides& o) {
  if (!j.contains("environment")) j["environment"] = json::object();
  if (!j.contains("estimator")) j["estimator"] = json::object();
  if (o.gamma) j["environment"]["gamma"] = *o.gamma;
  if (o.tau) j["environment"]["tau"] = *o.tau;
  if (o.estimator) j["estimator"]["approximator"] = *o.estimator;
  if (o.K) j["estimator"]["K"] = *o.K;
  if (o.r) j["estimator"]["r"] = *o.r;
  if (o.M) j["M"] = *o.M;
  if (!o.levels.empty()) j["levels"] = o.levels;
  if (o.runs) j["runs"] = *o.runs;
  if (o.seed) j["seed"] = *o.seed;
  if (o.out) j["output"] = *o.out;
  if (o.workers) j["workers"] = *o.workers;
}

void warn_contraction(const ExperimentConfig& cfg) {
  if (cfg.environment != EnvironmentKind::Finite) return;
  const MdpSpec& s = cfg.finite->spec();
  const PlainConstants pc = plain_constants(s.alpha, s.beta, s.tau, s.gamma);
  if (!pc.contracts) {
    std::cerr << json{{"warning", "gamma L >= 1; error bounds do not apply"},
                      {"gamma_L", pc.gamma_L}}.dump()
              << '\n';
  }
}

int run(const std::string& config_path, const RunOverrides& o, bool quiet) {
  std::ifstream in(config_path);
  if (!in) throw IoError("cannot open config '" + config_path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidParameter("config '" + config_path + "': " + e.what());
  }
  apply_overrides(j, o);
  const ExperimentConfig cfg = config_from_json(j);
  warn_contraction(cfg);
  const auto reference = experiment_reference(cfg);
  const auto records = run_experiment(cfg, [quiet](const RunRecord& r) {
    if (quiet) return;
    std::cerr << "level " << r.level << " run " << r.run_id << ": "
              << (r.error.empty() ? std::to_string(r.estimate) : "error: " + r.error) << " ("
              << r.wall_time_s << " s)\n";
  });
  const json summary = summary_json(records, reference, cfg.echo);
  if (!cfg.output.empty()) emit_results(cfg.output, records, summary);
  std::cout << summary.dump(2) << '\n';
  return 0;
}

struct RiccatiArgs {
  int d = 20;
  double eps = 0.1;
  double gamma = 0.4;
  std::optional<double> tau;
  double state = 0.0;
  double action = 1.0;
  bool print_matrix = false;
};

int riccati(const RiccatiArgs& a) {
  json env = {{"d", a.d}, {"eps", a.eps}, {"gamma", a.gamma}};
  if (a.tau) env["tau"] = *a.tau;
  const LqgProblem p = lqg_problem_from_json(env);
  const auto sol = riccati_solve(p);
  const Eigen::VectorXd s = Eigen::VectorXd::Constant(p.state_dim(), a.state);
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(p.action_dim(), a.action);
  json out = {{"gamma", p.gamma},
              {"tau", p.tau},
              {"c", sol.c},
              {"q_ref", reference_q(p, sol, s, u)},
              {"value", reference_value(sol, s)},
              {"iterations", sol.iterations},
              {"residual", sol.residual}};
  if (a.print_matrix) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < sol.P.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index k = 0; k < sol.P.cols(); ++k) row.push_back(sol.P(i, k));
      rows.push_back(row);
    }
    out["P"] = rows;
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

int verify_cmd(const std::vector<std::string>& names, bool full, bool list,
               const verify::Options& opts) {
  const auto& all = verify::criteria();
  if (list) {
    for (const auto& c : all) {
      std::cout << c.name << (c.slow ? " (slow)" : "") << ": " << c.summary << '\n';
    }
    return 0;
  }
  int failed = 0;
  for (const auto& c : all) {
    const bool named = std::find(names.begin(), names.end(), c.name) != names.end();
    if (!names.empty() ? !named : (c.slow && !full)) continue;
    const auto r = verify::run_criterion(c, opts);
    std::cout << (r.passed ? "PASS " : "FAIL ") << c.name << " [" << r.seconds << " s] "
              << r.detail << std::endl;
    if (!r.passed) ++failed;
  }
  for (const auto& n : names) {
    if (std::none_of(all.begin(), all.end(), [&](const auto& c) { return c.name == n; })) {
      throw InvalidParameter("unknown criterion '" + n + "'");
    }
  }
  return failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilevel Monte Carlo Q-function estimation"};
  app.require_subcommand(1);

  PlanArgs pa;
  auto* plan_cmd = app.add_subcommand("plan", "schedules and bounds for a target accuracy");
  plan_cmd->add_option("--epsilon", pa.epsilon, "target accuracy")->capture_default_str();
  plan_cmd->add_option("--gamma", pa.gamma)->capture_default_str();
  plan_cmd->add_option("--tau", pa.tau)->capture_default_str();
  plan_cmd->add_option("--c-min", pa.c_min)->capture_default_str();
  plan_cmd->add_option("--c-max", pa.c_max)->capture_default_str();
  plan_cmd->add_option("--r", pa.r, "Blanchet-Glynn geometric parameter")->capture_default_str();
  plan_cmd->add_option("--L-bg", pa.L_bg, "Blanchet-Glynn Lipschitz constant (else estimated)");
  plan_cmd->add_option("--e0", pa.e0, "bound on |Q0 - Q*| (default half the value range)");

  std::string config_path;
  RunOverrides ro;
  bool quiet = false;
  auto* run_cmd = app.add_subcommand("run", "run an experiment from a JSON config");
  run_cmd->add_option("config", config_path)->required();
  run_cmd->add_option("--gamma", ro.gamma);
  run_cmd->add_option("--tau", ro.tau);
  run_cmd->add_option("--estimator", ro.estimator, "soft-Bellman approximator")
      ->check(CLI::IsMember({"mc", "bg", "exact"}));
  run_cmd->add_option("--K", ro.K);
  run_cmd->add_option("--r", ro.r);
  run_cmd->add_option("--M", ro.M);
  run_cmd->add_option("--levels", ro.levels)->delimiter(',');
  run_cmd->add_option("--runs", ro.runs);
  run_cmd->add_option("--seed", ro.seed);
  run_cmd->add_option("--out", ro.out, "directory for runs.csv and summary.json");
  run_cmd->add_option("--workers", ro.workers);
  run_cmd->add_flag("--quiet", quiet, "no per-run progress on stderr");

  RiccatiArgs ra;
  auto* ric_cmd = app.add_subcommand("riccati", "solve the LQG Riccati equation");
  ric_cmd->add_option("--d", ra.d)->capture_default_str();
  ric_cmd->add_option("--eps", ra.eps)->capture_default_str();
  ric_cmd->add_option("--gamma", ra.gamma)->capture_default_str();
  ric_cmd->add_option("--tau", ra.tau, "default 1/(1-gamma)");
  ric_cmd->add_option("--state", ra.state, "fill value of s")->capture_default_str();
  ric_cmd->add_option("--action", ra.action, "fill value of a")->capture_default_str();
  ric_cmd->add_flag("--print-P", ra.print_matrix);

  std::vector<std::string> names;
  bool full = false;
  bool list = false;
  verify::Options vo;
  auto* ver_cmd = app.add_subcommand("verify", "run acceptance checks");
  ver_cmd->add_option("--criterion", names, "run only these criteria");
  ver_cmd->add_flag("--full", full, "include the slow criteria");
  ver_cmd->add_flag("--list", list);
  ver_cmd->add_option("--workers", vo.workers)->capture_default_str();
  ver_cmd->add_option("--max-hours", vo.max_hours)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("usage", e.what());
  }

  try {
    if (*plan_cmd) {
      std::cout << plan(pa).dump(2) << '\n';
      return 0;
    }
    if (*run_cmd) return run(config_path, ro, quiet);
    if (*ric_cmd) return riccati(ra);
    if (*ver_cmd) return verify_cmd(names, full, list, vo);
  } catch (const Error& e) {
    return report_error(to_string(e.kind()), e.what());
  } catch (const std::exception& e) {
    return report_error("internal", e.what());
  }
  return 0;
}
