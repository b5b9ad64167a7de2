#include "mlmcq/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "mlmcq/errors.hpp"

namespace mlmcq {

using nlohmann::json;

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string("config field '") + key + "': " + e.what());
  }
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* name) {
  try {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw InvalidParameter(std::string("matrix '") + name + "' is empty");
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.front().size()) {
        throw InvalidParameter(std::string("matrix '") + name + "' is ragged");
      }
      for (std::size_t k = 0; k < rows[i].size(); ++k) m(i, k) = rows[i][k];
    }
    return m;
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string("matrix '") + name + "': " + e.what());
  }
}

std::vector<double> vector_field(const json& j, const char* key, std::size_t dim,
                                 double fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return std::vector<double>(dim, fallback);
  const json& v = j.at(key);
  if (v.is_number()) return std::vector<double>(dim, v.get<double>());
  auto out = get_or<std::vector<double>>(j, key, {});
  if (out.size() != dim) {
    throw InvalidParameter(std::string("config field '") + key + "' has length " +
                           std::to_string(out.size()) + ", expected " + std::to_string(dim));
  }
  return out;
}

FiniteMdp finite_from_json(const json& env) {
  const double gamma = get_or<double>(env, "gamma", 0.5);
  const double tau = get_or<double>(env, "tau", 1.0);
  if (get_or<std::string>(env, "instance", "") == "reference") {
    return reference_instance(gamma, tau);
  }
  if (!env.contains("cost") || !env.contains("transition") || !env.contains("mu")) {
    throw InvalidParameter("finite environment needs 'cost', 'transition' and 'mu'");
  }
  auto cost = get_or<FiniteMdp::Table>(env, "cost", {});
  auto transition = get_or<std::vector<FiniteMdp::Table>>(env, "transition", {});
  auto mu = get_or<std::vector<double>>(env, "mu", {});
  if (env.contains("c_min") || env.contains("c_max")) {
    return FiniteMdp(std::move(cost), std::move(transition), std::move(mu), gamma, tau,
                     get_or<double>(env, "c_min", 0.0), get_or<double>(env, "c_max", 0.0));
  }
  return FiniteMdp(std::move(cost), std::move(transition), std::move(mu), gamma, tau);
}

ApproximatorSpec approximator_from_json(const json& est) {
  const std::string kind = get_or<std::string>(est, "approximator", "mc");
  ApproximatorSpec spec;
  if (kind == "mc" || kind == "plain_mc") {
    spec = ApproximatorSpec::plain_mc(get_or<int>(est, "K", 1));
  } else if (kind == "bg" || kind == "blanchet_glynn") {
    spec = ApproximatorSpec::blanchet_glynn(get_or<double>(est, "r", 0.6));
  } else if (kind == "exact") {
    spec = ApproximatorSpec::exact();
  } else {
    throw InvalidParameter("unknown approximator '" + kind + "'");
  }
  return spec;
}

template <GenerativeModel Model>
EstimateResult evaluate(const Model& model, const ExperimentConfig& cfg, int level,
                        const typename Model::State& s, const typename Model::Action& a,
                        const RngStream& stream) {
  auto params = EstimatorParams<Model>::defaults(model, level, cfg.M, cfg.approximator);
  params.max_depth = cfg.max_depth;
  if (cfg.truncation) params.truncation = *cfg.truncation;
  if (cfg.estimator == EstimatorKind::SimpleMC) return iterative_mc(model, params, s, a, stream);
  return mlmc(model, params, s, a, stream);
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (runs < 1) throw InvalidParameter("runs must be at least 1");
  if (levels.empty()) throw InvalidParameter("levels must be nonempty");
  for (int l : levels) {
    if (l < 0) throw InvalidParameter("levels must be nonnegative");
    if (l > max_depth) throw ResourceError("level " + std::to_string(l) + " exceeds max_depth");
  }
  if (M < 1) throw InvalidParameter("M must be at least 1");
  if (workers < 1) throw InvalidParameter("workers must be at least 1");
  approximator.validate();
  if (environment == EnvironmentKind::Lqg) {
    lqg.validate();
    if (state.size() != static_cast<std::size_t>(lqg.state_dim()) ||
        action.size() != static_cast<std::size_t>(lqg.action_dim())) {
      throw InvalidParameter("query point does not match the LQG dimensions");
    }
    if (reference == ReferenceKind::ValueIteration) {
      throw InvalidParameter("value iteration reference needs a finite environment");
    }
  } else {
    if (!finite) throw InvalidParameter("finite environment is missing");
    if (state.empty() || action.empty()) throw InvalidParameter("query point is missing");
    const double s = state.front();
    const double a = action.front();
    if (s != std::floor(s) || s < 0 || s >= finite->num_states() || a != std::floor(a) ||
        a < 0 || a >= finite->num_actions()) {
      throw InvalidParameter("query point is not a valid state/action index");
    }
    if (reference == ReferenceKind::Riccati) {
      throw InvalidParameter("Riccati reference needs an LQG environment");
    }
  }
  if (estimator == EstimatorKind::SimpleMC && approximator.kind != ApproximatorKind::PlainMC) {
    throw InvalidParameter("simple MC needs the plain Monte Carlo approximator");
  }
}

LqgProblem lqg_problem_from_json(const json& env) {
  const int d = get_or<int>(env, "d", 20);
  const double eps = get_or<double>(env, "eps", 0.1);
  const double gamma = get_or<double>(env, "gamma", 0.4);
  const double tau = get_or<double>(env, "tau", 1.0 / (1.0 - gamma));
  const TestMatrices m = paper_test_matrices(d, eps);
  LqgProblem p{m.A, m.B, m.R1, m.R2, gamma, tau};
  if (env.contains("A")) p.A = matrix_from_json(env.at("A"), "A");
  if (env.contains("B")) p.B = matrix_from_json(env.at("B"), "B");
  if (env.contains("R1")) p.R1 = matrix_from_json(env.at("R1"), "R1");
  if (env.contains("R2")) p.R2 = matrix_from_json(env.at("R2"), "R2");
  p.validate();
  return p;
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw InvalidParameter("config must be a JSON object");
  ExperimentConfig cfg;
  cfg.echo = j;
  const json env = j.value("environment", json::object());
  const std::string env_type = get_or<std::string>(env, "type", "lqg");
  std::size_t ds = 1;
  std::size_t da = 1;
  if (env_type == "lqg") {
    cfg.environment = EnvironmentKind::Lqg;
    cfg.lqg = lqg_problem_from_json(env);
    ds = static_cast<std::size_t>(cfg.lqg.state_dim());
    da = static_cast<std::size_t>(cfg.lqg.action_dim());
    cfg.state = vector_field(j, "state", ds, 0.0);
    cfg.action = vector_field(j, "action", da, 1.0);
  } else if (env_type == "finite") {
    cfg.environment = EnvironmentKind::Finite;
    cfg.finite = finite_from_json(env);
    cfg.state = vector_field(j, "state", 1, 0.0);
    cfg.action = vector_field(j, "action", 1, 0.0);
  } else {
    throw InvalidParameter("unknown environment type '" + env_type + "'");
  }

  const json est = j.value("estimator", json::object());
  const std::string est_type = get_or<std::string>(est, "type", "mlmc");
  if (est_type == "mlmc") {
    cfg.estimator = EstimatorKind::MLMC;
  } else if (est_type == "simple_mc") {
    cfg.estimator = EstimatorKind::SimpleMC;
  } else {
    throw InvalidParameter("unknown estimator type '" + est_type + "'");
  }
  cfg.approximator = approximator_from_json(est);

  if (j.contains("levels") && j.at("levels").is_number()) {
    cfg.levels = {j.at("levels").get<int>()};
  } else {
    cfg.levels = get_or<std::vector<int>>(j, "levels", {});
  }
  cfg.M = get_or<int>(j, "M", 1);
  cfg.runs = get_or<int>(j, "runs", 1);
  cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
  cfg.max_depth = get_or<int>(j, "max_depth", 10);
  cfg.workers = get_or<int>(j, "workers", 1);
  cfg.output = get_or<std::string>(j, "output", "");

  const std::string ref = get_or<std::string>(j, "reference", "auto");
  if (ref == "auto") {
    cfg.reference = cfg.environment == EnvironmentKind::Lqg ? ReferenceKind::Riccati
                                                            : ReferenceKind::ValueIteration;
  } else if (ref == "riccati") {
    cfg.reference = ReferenceKind::Riccati;
  } else if (ref == "value_iteration") {
    cfg.reference = ReferenceKind::ValueIteration;
  } else if (ref == "none") {
    cfg.reference = ReferenceKind::None;
  } else {
    throw InvalidParameter("unknown reference '" + ref + "'");
  }

  if (j.contains("truncation") && !j.at("truncation").is_null()) {
    const json& t = j.at("truncation");
    if (t.is_string() && t.get<std::string>() == "none") {
      cfg.truncation = Truncation::disabled();
    } else {
      const auto bounds = get_or<std::vector<double>>(j, "truncation", {});
      if (bounds.size() != 2) throw InvalidParameter("truncation must be [alpha, beta] or \"none\"");
      cfg.truncation = Truncation::enabled_on(bounds[0], bounds[1]);
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "': " + std::strerror(errno));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidParameter("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

RngStream run_stream(std::uint64_t seed, int level, int replicate) {
  return RngStream(seed).child(level).child(replicate);
}

std::optional<double> experiment_reference(const ExperimentConfig& cfg) {
  switch (cfg.reference) {
    case ReferenceKind::None:
      return std::nullopt;
    case ReferenceKind::Riccati: {
      const RiccatiSolution sol = riccati_solve(cfg.lqg);
      const Eigen::Map<const Eigen::VectorXd> s(cfg.state.data(), cfg.state.size());
      const Eigen::Map<const Eigen::VectorXd> a(cfg.action.data(), cfg.action.size());
      return reference_q(cfg.lqg, sol, s, a);
    }
    case ReferenceKind::ValueIteration: {
      const auto q = value_iteration(*cfg.finite);
      return q[static_cast<int>(cfg.state.front())][static_cast<int>(cfg.action.front())];
    }
  }
  return std::nullopt;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg,
                                      const std::function<void(const RunRecord&)>& on_done) {
  cfg.validate();
  const std::size_t total = cfg.levels.size() * static_cast<std::size_t>(cfg.runs);
  std::vector<RunRecord> records(total);

  std::optional<LqgModel> lqg_model;
  LqgVector s_lqg;
  LqgVector a_lqg;
  if (cfg.environment == EnvironmentKind::Lqg) {
    lqg_model.emplace(cfg.lqg);
    s_lqg = Eigen::Map<const Eigen::VectorXd>(cfg.state.data(), cfg.state.size());
    a_lqg = Eigen::Map<const Eigen::VectorXd>(cfg.action.data(), cfg.action.size());
  }

  const auto run_one = [&](std::size_t idx) {
    const int level = cfg.levels[idx / cfg.runs];
    const int rep = static_cast<int>(idx % cfg.runs);
    RunRecord rec;
    rec.run_id = static_cast<std::int64_t>(idx);
    rec.level = level;
    rec.seed = cfg.seed;
    const RngStream stream = run_stream(cfg.seed, level, rep);
    try {
      EstimateResult res;
      if (lqg_model) {
        res = evaluate(*lqg_model, cfg, level, s_lqg, a_lqg, stream);
      } else {
        res = evaluate(*cfg.finite, cfg, level, static_cast<int>(cfg.state.front()),
                       static_cast<int>(cfg.action.front()), stream);
      }
      rec.estimate = res.value;
      rec.wall_time_s = res.wall_time;
      rec.transitions = res.ledger.transitions;
      rec.actions = res.ledger.actions;
    } catch (const std::exception& e) {
      rec.estimate = std::nan("");
      rec.error = e.what();
    }
    records[idx] = std::move(rec);
  };

  std::mutex callback_mutex;
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t idx = next++; idx < total; idx = next++) {
      run_one(idx);
      if (on_done) {
        std::lock_guard lock(callback_mutex);
        on_done(records[idx]);
      }
    }
  };
  const std::size_t nworkers = std::min<std::size_t>(cfg.workers, std::max<std::size_t>(total, 1));
  if (nworkers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < nworkers; ++w) pool.emplace_back(worker);
  }
  return records;
}

double rmsre(std::span<const double> estimates, double reference) {
  if (reference == 0.0) throw InvalidParameter("RMSRE needs a nonzero reference");
  if (estimates.empty()) throw InvalidParameter("RMSRE of an empty sample");
  double sum = 0.0;
  for (double x : estimates) {
    const double rel = (x - reference) / reference;
    sum += rel * rel;
  }
  return std::sqrt(sum / static_cast<double>(estimates.size()));
}

std::vector<LevelSummary> summarize(std::span<const RunRecord> records,
                                    std::optional<double> reference) {
  std::vector<int> levels;
  for (const auto& r : records) levels.push_back(r.level);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  std::vector<LevelSummary> out;
  for (int level : levels) {
    LevelSummary s;
    s.level = level;
    std::vector<double> est;
    double time = 0.0;
    std::uint64_t trans = 0;
    std::uint64_t acts = 0;
    for (const auto& r : records) {
      if (r.level != level) continue;
      ++s.runs;
      if (!r.error.empty() || !std::isfinite(r.estimate)) {
        ++s.failed;
        continue;
      }
      est.push_back(r.estimate);
      time += r.wall_time_s;
      trans += r.transitions;
      acts += r.actions;
    }
    if (!est.empty()) {
      const double n = static_cast<double>(est.size());
      double sum = 0.0;
      for (double x : est) sum += x;
      s.mean_estimate = sum / n;
      s.mean_wall_time_s = time / n;
      s.mean_transitions = static_cast<double>(trans) / n;
      s.mean_actions = static_cast<double>(acts) / n;
      s.mean_total = static_cast<double>(trans + acts) / n;
      if (reference && *reference != 0.0) s.rmsre = rmsre(est, *reference);
    } else {
      s.mean_estimate = std::nan("");
    }
    out.push_back(s);
  }
  return out;
}

json summary_json(std::span<const RunRecord> records, std::optional<double> reference,
                  const json& config_echo) {
  json j;
  j["config"] = config_echo;
  j["reference"] = reference ? json(*reference) : json(nullptr);
  j["total_runs"] = records.size();
  json levels = json::array();
  for (const auto& s : summarize(records, reference)) {
    json l;
    l["level"] = s.level;
    l["runs"] = s.runs;
    l["failed"] = s.failed;
    l["mean_estimate"] = std::isfinite(s.mean_estimate) ? json(s.mean_estimate) : json(nullptr);
    l["rmsre"] = s.rmsre ? json(*s.rmsre) : json(nullptr);
    l["mean_wall_time_s"] = s.mean_wall_time_s;
    l["mean_transitions"] = s.mean_transitions;
    l["mean_actions"] = s.mean_actions;
    l["mean_total"] = s.mean_total;
    levels.push_back(std::move(l));
  }
  j["levels"] = std::move(levels);
  json errors = json::array();
  for (const auto& r : records) {
    if (!r.error.empty()) errors.push_back({{"run_id", r.run_id}, {"message", r.error}});
  }
  j["errors"] = std::move(errors);
  return j;
}

std::string records_to_csv(std::span<const RunRecord> records) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.run_id) + ',' + std::to_string(r.level) + ',' +
           format_double(r.estimate) + ',' + format_double(r.wall_time_s) + ',' +
           std::to_string(r.transitions) + ',' + std::to_string(r.actions) + ',' +
           std::to_string(r.seed) + '\n';
  }
  return out;
}

std::vector<RunRecord> records_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw InvalidParameter("CSV header does not match the run schema");
  }
  std::vector<RunRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 7) {
      throw InvalidParameter("CSV line " + std::to_string(lineno) + " has " +
                             std::to_string(f.size()) + " fields");
    }
    try {
      RunRecord r;
      r.run_id = std::stoll(f[0]);
      r.level = std::stoi(f[1]);
      r.estimate = std::strtod(f[2].c_str(), nullptr);
      r.wall_time_s = std::strtod(f[3].c_str(), nullptr);
      r.transitions = std::stoull(f[4]);
      r.actions = std::stoull(f[5]);
      r.seed = std::stoull(f[6]);
      out.push_back(r);
    } catch (const std::logic_error&) {
      throw InvalidParameter("CSV line " + std::to_string(lineno) + " is malformed");
    }
  }
  return out;
}

void emit_results(const std::filesystem::path& dir, std::span<const RunRecord> records,
                  const json& summary) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  const auto write = [](const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "': " + std::strerror(errno));
    out << body;
    if (!out) throw IoError("write to '" + path.string() + "' failed");
  };
  write(dir / "runs.csv", records_to_csv(records));
  write(dir / "summary.json", summary.dump(2) + "\n");
}

}  // namespace mlmcq
