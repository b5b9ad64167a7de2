#pragma once

// Nested Monte Carlo estimators of Q*(s, a): simple iterative MC and the
// multilevel recursion, plus the closed cost recursions they must match.
//
// Stream layout, relative to the stream of one estimator call:
//   child((l << 40) | i)     replicate i of level l
//     .child(0)              transition engine for S_i
//     .child(1)              stream handed to the soft-Bellman approximator
// Iterative MC uses level 0 for all of its M replicates.

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mlmcq/bellman.hpp"
#include "mlmcq/errors.hpp"
#include "mlmcq/mdp.hpp"
#include "mlmcq/rng.hpp"

namespace mlmcq {

struct Truncation {
  bool enabled = false;
  double alpha = 0.0;
  double beta = 0.0;

  static Truncation enabled_on(double alpha, double beta) {
    if (alpha > beta) throw InvalidParameter("truncation bounds out of order");
    return {true, alpha, beta};
  }
  static Truncation disabled() { return {}; }

  double operator()(double x) const { return enabled ? truncate(x, alpha, beta) : x; }
};

/// Default truncation of a model: [alpha, beta] if costs are bounded.
inline Truncation default_truncation(const MdpSpec& spec) {
  return spec.bounded_cost ? Truncation::enabled_on(spec.alpha, spec.beta)
                           : Truncation::disabled();
}

/// Default initial guess: (alpha + beta) / 2 when bounded, 0 otherwise.
inline double default_q0(const MdpSpec& spec) {
  return spec.bounded_cost ? 0.5 * (spec.alpha + spec.beta) : 0.0;
}

template <GenerativeModel Model>
struct EstimatorParams {
  using State = typename Model::State;
  using Action = typename Model::Action;
  using QFunction = std::function<double(const State&, const Action&)>;

  int n = 0;
  int M = 1;
  ApproximatorSpec approximator;
  QFunction q0;  // empty means default_q0(spec) as a constant
  Truncation truncation;
  int max_depth = 10;

  /// Parameters with the model's default q0 and truncation.
  static EstimatorParams defaults(const Model& model, int n, int M,
                                  ApproximatorSpec approximator) {
    EstimatorParams p;
    p.n = n;
    p.M = M;
    p.approximator = approximator;
    p.truncation = default_truncation(model.spec());
    return p;
  }

  void validate() const {
    if (n < 0) throw InvalidParameter("level n must be nonnegative");
    if (M < 1) throw InvalidParameter("branching M must be at least 1");
    if (n > max_depth) {
      throw ResourceError("level " + std::to_string(n) + " exceeds depth cap " +
                          std::to_string(max_depth));
    }
    approximator.validate();
  }
};

struct EstimateResult {
  double value = 0.0;
  SampleLedger ledger;
  double wall_time = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::int64_t> path;
};

namespace detail {

inline RngStream replicate_stream(const RngStream& st, int level, std::int64_t i) {
  return st.child((static_cast<std::int64_t>(level) << 40) | i);
}

template <GenerativeModel Model>
struct Recursion {
  using State = typename Model::State;
  using Action = typename Model::Action;

  const Oracle<Model>& oracle;
  const EstimatorParams<Model>& params;
  double gamma;
  double q0_const;

  double q0(const State& s, const Action& a) const {
    return params.q0 ? params.q0(s, a) : q0_const;
  }

  static std::int64_t replicates(int M, int power) {
    std::int64_t out = 1;
    for (int j = 0; j < power; ++j) out *= M;
    return out;
  }

  double mlmc(int n, const State& s, const Action& a, const RngStream& st) const {
    if (n == 0) return params.truncation(q0(s, a));
    const auto base = [this](const State& x, const Action& u, const RngStream&) {
      return params.truncation(q0(x, u));
    };
    double sum = 0.0;
    for (int l = 0; l < n; ++l) {
      const std::int64_t reps = replicates(params.M, n - l);
      double level_sum = 0.0;
      for (std::int64_t i = 0; i < reps; ++i) {
        const RngStream rep = replicate_stream(st, l, i);
        CounterEngine trans = rep.child(0).engine();
        const State next = oracle.sample_transition(s, a, trans);
        const RngStream inner = rep.child(1);
        if (l == 0) {
          level_sum += approximate_apply(oracle, params.approximator, base, next, inner);
        } else {
          const auto fine = [this, l](const State& x, const Action& u, const RngStream& r) {
            return mlmc(l, x, u, r);
          };
          const auto coarse = [this, l](const State& x, const Action& u, const RngStream& r) {
            return mlmc(l - 1, x, u, r);
          };
          level_sum += approximate_diff(oracle, params.approximator, fine, coarse, next, inner);
        }
      }
      sum += level_sum / static_cast<double>(reps);
    }
    return params.truncation(oracle.cost(s, a) + gamma * sum);
  }

  double iterative(int n, const State& s, const Action& a, const RngStream& st) const {
    if (n == 0) return q0(s, a);
    const auto prev = [this, n](const State& x, const Action& u, const RngStream& r) {
      return iterative(n - 1, x, u, r);
    };
    double sum = 0.0;
    for (std::int64_t i = 0; i < params.M; ++i) {
      const RngStream rep = replicate_stream(st, 0, i);
      CounterEngine trans = rep.child(0).engine();
      const State next = oracle.sample_transition(s, a, trans);
      sum += plain_mc_apply(oracle, prev, next, params.approximator.K, rep.child(1));
    }
    return oracle.cost(s, a) + gamma * sum / static_cast<double>(params.M);
  }
};

template <GenerativeModel Model, class Body>
EstimateResult timed_estimate(const Model& model, const RngStream& stream, Body&& body) {
  EstimateResult out;
  const auto t0 = std::chrono::steady_clock::now();
  Oracle<Model> oracle(model, out.ledger);
  out.value = body(oracle);
  out.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.seed = stream.seed();
  out.path.assign(stream.path().begin(), stream.path().end());
  return out;
}

}  // namespace detail

/// Multilevel estimate of Q*(s, a). Sub-estimators are never shared: the fine
/// and coarse terms of every correction are separate recursive calls.
template <GenerativeModel Model>
EstimateResult mlmc(const Model& model, const EstimatorParams<Model>& params,
                    const typename Model::State& s, const typename Model::Action& a,
                    const RngStream& stream) {
  params.validate();
  const MdpSpec spec = model.spec();
  return detail::timed_estimate(model, stream, [&](const Oracle<Model>& oracle) {
    detail::Recursion<Model> rec{oracle, params, spec.gamma, default_q0(spec)};
    return rec.mlmc(params.n, s, a, stream);
  });
}

/// Simple nested Monte Carlo iteration Q_n = c + gamma/M sum T_K Q_{n-1}(S_i).
/// Requires a plain Monte Carlo approximator; no truncation is applied.
template <GenerativeModel Model>
EstimateResult iterative_mc(const Model& model, const EstimatorParams<Model>& params,
                            const typename Model::State& s,
                            const typename Model::Action& a, const RngStream& stream) {
  params.validate();
  if (params.approximator.kind != ApproximatorKind::PlainMC) {
    throw InvalidParameter("iterative Monte Carlo needs the plain Monte Carlo approximator");
  }
  const MdpSpec spec = model.spec();
  return detail::timed_estimate(model, stream, [&](const Oracle<Model>& oracle) {
    detail::Recursion<Model> rec{oracle, params, spec.gamma, default_q0(spec)};
    return rec.iterative(params.n, s, a, stream);
  });
}

// ---------------------------------------------------------------------------
// Cost recursions

/// Exact draw count of the plain Monte Carlo multilevel estimator.
/// Throws ResourceError if the count does not fit in 64 bits.
std::uint64_t mlmcb_cost(int n, int M, int K);

/// Same recursion in floating point; K may be fractional.
double mlmc_cost_real(int n, int M, double K);

/// Expected draw count of the Blanchet-Glynn multilevel estimator, i.e. the
/// recursion with K replaced by 2r/(2r-1) + 1. Throws for r <= 1/2.
double mlmcu_expected_cost(int n, int M, double r);

/// Exact ledger of simple iterative MC.
SampleLedger iterative_mc_cost(int n, int M, int K);

}  // namespace mlmcq
