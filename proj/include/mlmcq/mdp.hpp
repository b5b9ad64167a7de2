#pragma once

// MDP description, the generative-oracle contract and the sample ledger.

#include <concepts>
#include <cstdint>
#include <utility>

#include "mlmcq/rng.hpp"

namespace mlmcq {

/// A-priori value range [alpha, beta] of Q*.
struct ValueBounds {
  double alpha = 0.0;
  double beta = 0.0;
};

/// alpha = c_min / (1 - gamma), beta = c_max / (1 - gamma).
ValueBounds derive_bounds(double c_min, double c_max, double gamma);

/// min(max(x, alpha), beta). Throws InvalidParameter when alpha > beta.
double truncate(double x, double alpha, double beta);
inline double truncate(double x, const ValueBounds& b) {
  return truncate(x, b.alpha, b.beta);
}

struct MdpSpec {
  double gamma = 0.0;
  double tau = 1.0;
  double c_min = 0.0;
  double c_max = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  // Unbounded mode (e.g. LQG): the cost range checks and the derived
  // truncation are waived.
  bool bounded_cost = true;

  static MdpSpec bounded(double gamma, double tau, double c_min, double c_max);
  static MdpSpec unbounded(double gamma, double tau);

  ValueBounds bounds() const { return {alpha, beta}; }
  void validate() const;
};

/// Counts of oracle queries made while producing one estimate.
struct SampleLedger {
  std::uint64_t transitions = 0;
  std::uint64_t actions = 0;

  std::uint64_t total() const { return transitions + actions; }

  SampleLedger& operator+=(const SampleLedger& other) {
    transitions += other.transitions;
    actions += other.actions;
    return *this;
  }
  friend SampleLedger operator+(SampleLedger a, const SampleLedger& b) {
    return a += b;
  }
  friend bool operator==(const SampleLedger&, const SampleLedger&) = default;
};

/// Generative oracle: next-state sampler, cost, reference-measure sampler.
template <class M>
concept GenerativeModel =
    requires(const M& m, const typename M::State& s,
             const typename M::Action& a, CounterEngine& rng) {
      typename M::State;
      typename M::Action;
      { m.sample_transition(s, a, rng) } -> std::convertible_to<typename M::State>;
      { m.cost(s, a) } -> std::convertible_to<double>;
      { m.reference_action(rng) } -> std::convertible_to<typename M::Action>;
      { m.spec() } -> std::convertible_to<MdpSpec>;
    };

/// Models whose reference measure is a finite list of weighted actions.
template <class M>
concept FiniteActionModel =
    GenerativeModel<M> && requires(const M& m) {
      { m.action_support() };
    };

/// Ledgered view of a model: every draw increments exactly one counter.
template <GenerativeModel Model>
class Oracle {
 public:
  using State = typename Model::State;
  using Action = typename Model::Action;

  Oracle(const Model& model, SampleLedger& ledger)
      : model_(&model), ledger_(&ledger) {}

  State sample_transition(const State& s, const Action& a,
                          CounterEngine& rng) const {
    ++ledger_->transitions;
    return model_->sample_transition(s, a, rng);
  }

  Action reference_action(CounterEngine& rng) const {
    ++ledger_->actions;
    return model_->reference_action(rng);
  }

  double cost(const State& s, const Action& a) const { return model_->cost(s, a); }

  const Model& model() const { return *model_; }
  SampleLedger& ledger() const { return *ledger_; }

 private:
  const Model* model_;
  SampleLedger* ledger_;
};

}  // namespace mlmcq
