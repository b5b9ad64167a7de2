#include "mlmcq/finite_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mlmcq/errors.hpp"

namespace mlmcq {
namespace {

std::vector<double> stochastic_cdf(const std::vector<double>& row, const std::string& what) {
  std::vector<double> cdf;
  cdf.reserve(row.size());
  double total = 0.0;
  for (double p : row) {
    if (!(p >= 0.0)) throw InvalidParameter(what + " has a negative entry");
    total += p;
    cdf.push_back(total);
  }
  if (row.empty() || std::abs(total - 1.0) > 1e-12) {
    throw InvalidParameter(what + " does not sum to 1");
  }
  cdf.back() = 1.0;
  return cdf;
}

std::pair<double, double> table_range(const FiniteMdp::Table& cost) {
  if (cost.empty() || cost.front().empty()) throw InvalidParameter("empty cost table");
  double lo = cost[0][0];
  double hi = cost[0][0];
  for (const auto& row : cost) {
    for (double c : row) {
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
  }
  return {lo, hi};
}

}  // namespace

FiniteMdp::FiniteMdp(Table cost, std::vector<Table> transition, std::vector<double> mu,
                     double gamma, double tau)
    : FiniteMdp(cost, std::move(transition), std::move(mu), gamma, tau,
                table_range(cost).first, table_range(cost).second) {}

FiniteMdp::FiniteMdp(Table cost, std::vector<Table> transition, std::vector<double> mu,
                     double gamma, double tau, double c_min, double c_max)
    : cost_(std::move(cost)), transition_(std::move(transition)), mu_(std::move(mu)) {
  spec_ = MdpSpec::bounded(gamma, tau, c_min, c_max);
  const std::size_t ns = cost_.size();
  const std::size_t na = mu_.size();
  if (ns == 0 || na == 0) throw InvalidParameter("finite MDP needs states and actions");
  if (transition_.size() != ns) throw InvalidParameter("transition table has wrong state count");
  mu_cdf_ = stochastic_cdf(mu_, "reference measure");
  transition_cdf_.resize(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    if (cost_[s].size() != na) throw InvalidParameter("cost row has wrong action count");
    if (transition_[s].size() != na) {
      throw InvalidParameter("transition row has wrong action count");
    }
    for (std::size_t a = 0; a < na; ++a) {
      const double c = cost_[s][a];
      if (c < c_min || c > c_max) throw InvalidParameter("cost outside [c_min, c_max]");
      if (transition_[s][a].size() != ns) {
        throw InvalidParameter("transition row has wrong length");
      }
      transition_cdf_[s].push_back(stochastic_cdf(
          transition_[s][a],
          "transition row (" + std::to_string(s) + ", " + std::to_string(a) + ")"));
    }
  }
  for (std::size_t a = 0; a < na; ++a) {
    support_.push_back({static_cast<int>(a), mu_[a]});
  }
}

int FiniteMdp::inverse_cdf(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(),
                                                   static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

FiniteMdp::State FiniteMdp::sample_transition(State s, Action a, CounterEngine& rng) const {
  return inverse_cdf(transition_cdf_[s][a], rng.uniform());
}

FiniteMdp::Action FiniteMdp::reference_action(CounterEngine& rng) const {
  return inverse_cdf(mu_cdf_, rng.uniform());
}

namespace {

FiniteMdp::Table bellman_update(const FiniteMdp& mdp, const FiniteMdp::Table& q) {
  const int ns = mdp.num_states();
  const int na = mdp.num_actions();
  const double tau = mdp.spec().tau;
  std::vector<double> v(ns);
  for (int s = 0; s < ns; ++s) v[s] = soft_min_weighted(q[s], mdp.mu(), tau);
  FiniteMdp::Table out(ns, std::vector<double>(na));
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      double ev = 0.0;
      for (int t = 0; t < ns; ++t) ev += mdp.transition_table()[s][a][t] * v[t];
      out[s][a] = mdp.cost(s, a) + mdp.spec().gamma * ev;
    }
  }
  return out;
}

double sup_diff(const FiniteMdp::Table& x, const FiniteMdp::Table& y) {
  double out = 0.0;
  for (std::size_t s = 0; s < x.size(); ++s) {
    for (std::size_t a = 0; a < x[s].size(); ++a) out = std::max(out, std::abs(x[s][a] - y[s][a]));
  }
  return out;
}

}  // namespace

FiniteMdp::Table value_iteration(const FiniteMdp& mdp, int iterations, double tol) {
  if (iterations < 1) throw InvalidParameter("iterations must be positive");
  if (!(tol > 0.0)) throw InvalidParameter("tolerance must be positive");
  FiniteMdp::Table q(mdp.num_states(), std::vector<double>(mdp.num_actions(), 0.0));
  double delta = 0.0;
  for (int it = 0; it < iterations; ++it) {
    FiniteMdp::Table next = bellman_update(mdp, q);
    delta = sup_diff(next, q);
    q = std::move(next);
    if (delta < tol) return q;
  }
  throw ConvergenceError("value iteration did not converge", delta);
}

double bellman_residual(const FiniteMdp& mdp, const FiniteMdp::Table& q) {
  return sup_diff(q, bellman_update(mdp, q));
}

FiniteMdp reference_instance(double gamma, double tau) {
  FiniteMdp::Table cost = {{0.1, 0.9, 0.5}, {0.7, 0.2, 1.0}, {0.0, 0.6, 0.3}};
  std::vector<FiniteMdp::Table> p = {
      {{0.6, 0.3, 0.1}, {0.1, 0.8, 0.1}, {0.2, 0.2, 0.6}},
      {{0.5, 0.5, 0.0}, {0.3, 0.3, 0.4}, {0.0, 0.1, 0.9}},
      {{0.4, 0.2, 0.4}, {0.9, 0.05, 0.05}, {0.25, 0.5, 0.25}},
  };
  return FiniteMdp(std::move(cost), std::move(p), {1.0 / 3, 1.0 / 3, 1.0 / 3}, gamma, tau,
                   0.0, 1.0);
}

}  // namespace mlmcq
