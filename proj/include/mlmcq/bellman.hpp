#pragma once

// Exact soft-Bellman operator and its two stochastic approximations.
//
// A Q-function here is any callable `double(const State&, const Action&,
// const RngStream&)`; the stream argument lets recursive estimators consume
// fresh randomness per evaluation, deterministic Q-functions ignore it.
//
// Stream layout used by every approximator, relative to the stream it is
// handed:
//   child(0)           reference-action draws A_0, A_1, ...
//   child(1)           geometric level (Blanchet-Glynn only)
//   child(2 + 2k)      stream for evaluating the first Q at action k
//   child(3 + 2k)      stream for evaluating the second Q (difference form)

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mlmcq/errors.hpp"
#include "mlmcq/mdp.hpp"
#include "mlmcq/rng.hpp"

namespace mlmcq {

enum class ApproximatorKind { PlainMC, BlanchetGlynn, ExactFiniteSum };

std::string_view to_string(ApproximatorKind kind);

struct ApproximatorSpec {
  ApproximatorKind kind = ApproximatorKind::PlainMC;
  int K = 1;       // inner sample count, PlainMC
  double r = 0.6;  // geometric success parameter, BlanchetGlynn

  static ApproximatorSpec plain_mc(int K) { return {ApproximatorKind::PlainMC, K, 0.6}; }
  static ApproximatorSpec blanchet_glynn(double r) {
    return {ApproximatorKind::BlanchetGlynn, 1, r};
  }
  static ApproximatorSpec exact() { return {ApproximatorKind::ExactFiniteSum, 1, 0.6}; }

  /// Throws InvalidParameter on K < 1 or r outside (1/2, 1).
  void validate() const;
  /// True for Blanchet-Glynn with r outside (1/2, 3/4), where the variance
  /// bound no longer holds.
  bool outside_stable_range() const;
};

/// Largest geometric level accepted before giving up (2^49 inner draws).
inline constexpr int kMaxGeometricLevel = 48;

/// Streaming, shift-stabilised accumulator for -tau*log(mean exp(-q/tau)).
class SoftMinAccumulator {
 public:
  explicit SoftMinAccumulator(double tau) : tau_(tau) {}

  void add(double q) {
    if (!std::isfinite(q)) {
      throw NumericDomainError("soft-Bellman input is not finite: " + std::to_string(q));
    }
    const double x = q / tau_;
    if (count_ == 0) {
      shift_ = x;
      sum_ = 1.0;
    } else if (x < shift_) {
      sum_ = sum_ * std::exp(x - shift_) + 1.0;
      shift_ = x;
    } else {
      sum_ += std::exp(shift_ - x);
    }
    ++count_;
  }

  /// Accumulator over the union of both sample sets.
  static SoftMinAccumulator merge(const SoftMinAccumulator& a,
                                  const SoftMinAccumulator& b);

  double value() const;
  std::uint64_t count() const { return count_; }

 private:
  double tau_;
  double shift_ = 0.0;  // min q / tau seen so far
  double sum_ = 0.0;    // sum of exp(-(q/tau - shift))
  std::uint64_t count_ = 0;
};

/// -tau*log((1/n) sum exp(-q_i/tau)).
double soft_min_mean(std::span<const double> q, double tau);

/// -tau*log(sum w_i exp(-q_i/tau)); weights nonnegative summing to 1 (1e-12).
double soft_min_weighted(std::span<const double> q, std::span<const double> w,
                         double tau);

/// Blanchet-Glynn correction Delta_k / p(k) on the 2^(k+1) values q(s, A_1..).
/// Even/odd halves follow the 1-based action index.
double bg_correction(std::span<const double> q, int k, double r, double tau);

/// p(k) = r (1 - r)^k.
inline double geometric_pmf(int k, double r) { return r * std::pow(1.0 - r, k); }

/// k >= 0 with probability r (1 - r)^k.
int sample_geometric(double r, CounterEngine& rng);

/// An action together with its reference-measure weight.
template <class Action>
struct WeightedAction {
  Action action;
  double weight;
};

// ---------------------------------------------------------------------------
// Exact operator

template <class State, class Action, class QFn>
double exact_soft_bellman(QFn&& q, const State& s,
                          std::span<const WeightedAction<Action>> support,
                          double tau, const RngStream& stream) {
  if (support.empty()) throw InvalidParameter("empty action support");
  std::vector<double> values;
  std::vector<double> weights;
  values.reserve(support.size());
  weights.reserve(support.size());
  for (std::size_t k = 0; k < support.size(); ++k) {
    values.push_back(q(s, support[k].action, stream.child(2 + 2 * static_cast<std::int64_t>(k))));
    weights.push_back(support[k].weight);
  }
  return soft_min_weighted(values, weights, tau);
}

// ---------------------------------------------------------------------------
// Plain Monte Carlo

template <GenerativeModel Model, class QFn>
double plain_mc_apply(const Oracle<Model>& oracle, QFn&& q,
                      const typename Model::State& s, int K,
                      const RngStream& stream) {
  if (K < 1) throw InvalidParameter("plain Monte Carlo requires K >= 1");
  const double tau = oracle.model().spec().tau;
  CounterEngine actions = stream.child(0).engine();
  SoftMinAccumulator acc(tau);
  for (int k = 0; k < K; ++k) {
    const auto a = oracle.reference_action(actions);
    acc.add(q(s, a, stream.child(2 + 2 * static_cast<std::int64_t>(k))));
  }
  return acc.value();
}

/// Plain MC of q1 minus plain MC of q2 on one shared action set.
template <GenerativeModel Model, class QFn1, class QFn2>
double plain_mc_diff(const Oracle<Model>& oracle, QFn1&& q1, QFn2&& q2,
                     const typename Model::State& s, int K,
                     const RngStream& stream) {
  if (K < 1) throw InvalidParameter("plain Monte Carlo requires K >= 1");
  const double tau = oracle.model().spec().tau;
  CounterEngine actions = stream.child(0).engine();
  SoftMinAccumulator acc1(tau);
  SoftMinAccumulator acc2(tau);
  for (int k = 0; k < K; ++k) {
    const auto a = oracle.reference_action(actions);
    const auto idx = static_cast<std::int64_t>(k);
    acc1.add(q1(s, a, stream.child(2 + 2 * idx)));
    acc2.add(q2(s, a, stream.child(3 + 2 * idx)));
  }
  return acc1.value() - acc2.value();
}

// ---------------------------------------------------------------------------
// Blanchet-Glynn

namespace detail {

inline void check_bg_level(int k) {
  if (k > kMaxGeometricLevel) {
    throw ResourceError("geometric level " + std::to_string(k) +
                        " exceeds the supported maximum");
  }
}

struct BgParts {
  SoftMinAccumulator odd;
  SoftMinAccumulator even;
  double anchor;  // q(s, A_0)

  double estimate(int k, double r) const {
    const double full = SoftMinAccumulator::merge(odd, even).value();
    const double delta = full - 0.5 * (even.value() + odd.value());
    if (!std::isfinite(delta)) {
      throw NumericDomainError("Blanchet-Glynn difference is not finite at level " +
                               std::to_string(k));
    }
    return delta / geometric_pmf(k, r) + anchor;
  }
};

}  // namespace detail

/// Blanchet-Glynn estimate at a given geometric level k (2^(k+1) + 1 draws).
template <GenerativeModel Model, class QFn>
double bg_apply_at_level(const Oracle<Model>& oracle, QFn&& q,
                         const typename Model::State& s, double r, int k,
                         const RngStream& stream) {
  detail::check_bg_level(k);
  const double tau = oracle.model().spec().tau;
  CounterEngine actions = stream.child(0).engine();
  const std::int64_t n = std::int64_t{2} << k;
  const auto a0 = oracle.reference_action(actions);
  detail::BgParts parts{SoftMinAccumulator(tau), SoftMinAccumulator(tau),
                        q(s, a0, stream.child(2))};
  for (std::int64_t j = 1; j <= n; ++j) {
    const auto a = oracle.reference_action(actions);
    const double v = q(s, a, stream.child(2 + 2 * j));
    (j % 2 == 0 ? parts.even : parts.odd).add(v);
  }
  return parts.estimate(k, r);
}

template <GenerativeModel Model, class QFn>
double bg_apply(const Oracle<Model>& oracle, QFn&& q,
                const typename Model::State& s, double r,
                const RngStream& stream) {
  CounterEngine level_rng = stream.child(1).engine();
  const int k = sample_geometric(r, level_rng);
  return bg_apply_at_level(oracle, std::forward<QFn>(q), s, r, k, stream);
}

/// Blanchet-Glynn of q1 minus Blanchet-Glynn of q2 on one shared level and
/// action set.
template <GenerativeModel Model, class QFn1, class QFn2>
double bg_diff(const Oracle<Model>& oracle, QFn1&& q1, QFn2&& q2,
               const typename Model::State& s, double r,
               const RngStream& stream) {
  CounterEngine level_rng = stream.child(1).engine();
  const int k = sample_geometric(r, level_rng);
  detail::check_bg_level(k);
  const double tau = oracle.model().spec().tau;
  CounterEngine actions = stream.child(0).engine();
  const std::int64_t n = std::int64_t{2} << k;
  const auto a0 = oracle.reference_action(actions);
  detail::BgParts p1{SoftMinAccumulator(tau), SoftMinAccumulator(tau),
                     q1(s, a0, stream.child(2))};
  detail::BgParts p2{SoftMinAccumulator(tau), SoftMinAccumulator(tau),
                     q2(s, a0, stream.child(3))};
  for (std::int64_t j = 1; j <= n; ++j) {
    const auto a = oracle.reference_action(actions);
    const double v1 = q1(s, a, stream.child(2 + 2 * j));
    const double v2 = q2(s, a, stream.child(3 + 2 * j));
    if (j % 2 == 0) {
      p1.even.add(v1);
      p2.even.add(v2);
    } else {
      p1.odd.add(v1);
      p2.odd.add(v2);
    }
  }
  return p1.estimate(k, r) - p2.estimate(k, r);
}

// ---------------------------------------------------------------------------
// Dispatch on ApproximatorSpec

template <GenerativeModel Model, class QFn>
double approximate_apply(const Oracle<Model>& oracle, const ApproximatorSpec& spec,
                         QFn&& q, const typename Model::State& s,
                         const RngStream& stream) {
  switch (spec.kind) {
    case ApproximatorKind::PlainMC:
      return plain_mc_apply(oracle, std::forward<QFn>(q), s, spec.K, stream);
    case ApproximatorKind::BlanchetGlynn:
      return bg_apply(oracle, std::forward<QFn>(q), s, spec.r, stream);
    case ApproximatorKind::ExactFiniteSum:
      if constexpr (FiniteActionModel<Model>) {
        const auto& support = oracle.model().action_support();
        return exact_soft_bellman(q, s, std::span(support),
                                  oracle.model().spec().tau, stream);
      } else {
        throw InvalidParameter("exact soft-Bellman needs a finite reference measure");
      }
  }
  throw InvalidParameter("unknown approximator");
}

template <GenerativeModel Model, class QFn1, class QFn2>
double approximate_diff(const Oracle<Model>& oracle, const ApproximatorSpec& spec,
                        QFn1&& q1, QFn2&& q2, const typename Model::State& s,
                        const RngStream& stream) {
  switch (spec.kind) {
    case ApproximatorKind::PlainMC:
      return plain_mc_diff(oracle, std::forward<QFn1>(q1), std::forward<QFn2>(q2),
                           s, spec.K, stream);
    case ApproximatorKind::BlanchetGlynn:
      return bg_diff(oracle, std::forward<QFn1>(q1), std::forward<QFn2>(q2), s,
                     spec.r, stream);
    case ApproximatorKind::ExactFiniteSum:
      if constexpr (FiniteActionModel<Model>) {
        const auto& support = oracle.model().action_support();
        const double tau = oracle.model().spec().tau;
        const RngStream s1 = stream.child(0);
        const RngStream s2 = stream.child(1);
        return exact_soft_bellman(q1, s, std::span(support), tau, s1) -
               exact_soft_bellman(q2, s, std::span(support), tau, s2);
      } else {
        throw InvalidParameter("exact soft-Bellman needs a finite reference measure");
      }
  }
  throw InvalidParameter("unknown approximator");
}

}  // namespace mlmcq
