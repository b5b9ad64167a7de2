#pragma once

// Tabular MDP with a discrete reference measure; the small-instance oracle.

#include <vector>

#include "mlmcq/bellman.hpp"
#include "mlmcq/mdp.hpp"
#include "mlmcq/rng.hpp"

namespace mlmcq {

class FiniteMdp {
 public:
  using State = int;
  using Action = int;
  using Table = std::vector<std::vector<double>>;

  /// cost[s][a], transition[s][a][s'], mu[a]. Cost bounds default to the
  /// table range; pass explicit c_min <= c_max to widen them.
  FiniteMdp(Table cost, std::vector<Table> transition, std::vector<double> mu,
            double gamma, double tau);
  FiniteMdp(Table cost, std::vector<Table> transition, std::vector<double> mu,
            double gamma, double tau, double c_min, double c_max);

  int num_states() const { return static_cast<int>(cost_.size()); }
  int num_actions() const { return static_cast<int>(mu_.size()); }

  State sample_transition(State s, Action a, CounterEngine& rng) const;
  double cost(State s, Action a) const { return cost_[s][a]; }
  Action reference_action(CounterEngine& rng) const;
  const MdpSpec& spec() const { return spec_; }
  const std::vector<WeightedAction<Action>>& action_support() const { return support_; }

  const Table& cost_table() const { return cost_; }
  const std::vector<Table>& transition_table() const { return transition_; }
  const std::vector<double>& mu() const { return mu_; }

 private:
  static int inverse_cdf(const std::vector<double>& cdf, double u);

  Table cost_;
  std::vector<Table> transition_;
  std::vector<double> mu_;
  std::vector<std::vector<std::vector<double>>> transition_cdf_;
  std::vector<double> mu_cdf_;
  std::vector<WeightedAction<Action>> support_;
  MdpSpec spec_;
};

/// Q <- c + gamma P (T Q) until the sup-norm update is below tol.
/// Throws ConvergenceError if `iterations` sweeps are not enough.
FiniteMdp::Table value_iteration(const FiniteMdp& mdp, int iterations = 100000,
                                 double tol = 1e-13);

/// Sup-norm of Q - (c + gamma P T Q).
double bellman_residual(const FiniteMdp& mdp, const FiniteMdp::Table& q);

/// The fixed instance used across tests and acceptance checks: 3 states,
/// 3 actions with uniform reference measure, costs in [0, 1].
FiniteMdp reference_instance(double gamma, double tau);

}  // namespace mlmcq
