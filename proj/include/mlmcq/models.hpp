#pragma once

// Small generative models used for checks: a single-state model whose
// reference measure is the standard Gaussian.

#include "mlmcq/lqg.hpp"
#include "mlmcq/mdp.hpp"
#include "mlmcq/rng.hpp"

namespace mlmcq {

class GaussianActionModel {
 public:
  using State = int;
  using Action = LqgVector;

  GaussianActionModel(int dim, double tau, double gamma = 0.5)
      : dim_(dim), spec_(MdpSpec::unbounded(gamma, tau)) {}

  State sample_transition(State, const Action&, CounterEngine&) const { return 0; }
  double cost(State, const Action&) const { return 0.0; }
  Action reference_action(CounterEngine& rng) const {
    Action a(dim_);
    rng.fill_normal({a.data(), static_cast<std::size_t>(dim_)});
    return a;
  }
  const MdpSpec& spec() const { return spec_; }
  int dim() const { return dim_; }

 private:
  int dim_;
  MdpSpec spec_;
};

}  // namespace mlmcq
