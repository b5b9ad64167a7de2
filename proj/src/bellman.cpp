#include "mlmcq/bellman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace mlmcq {

std::string_view to_string(ApproximatorKind kind) {
  switch (kind) {
    case ApproximatorKind::PlainMC: return "plain_mc";
    case ApproximatorKind::BlanchetGlynn: return "blanchet_glynn";
    case ApproximatorKind::ExactFiniteSum: return "exact";
  }
  return "unknown";
}

void ApproximatorSpec::validate() const {
  switch (kind) {
    case ApproximatorKind::PlainMC:
      if (K < 1) throw InvalidParameter("plain Monte Carlo requires K >= 1");
      break;
    case ApproximatorKind::BlanchetGlynn:
      if (!(r > 0.5 && r < 1.0)) {
        throw InvalidParameter("Blanchet-Glynn requires 1/2 < r < 1, got r=" + std::to_string(r));
      }
      break;
    case ApproximatorKind::ExactFiniteSum:
      break;
  }
}

bool ApproximatorSpec::outside_stable_range() const {
  return kind == ApproximatorKind::BlanchetGlynn && !(r > 0.5 && r < 0.75);
}

SoftMinAccumulator SoftMinAccumulator::merge(const SoftMinAccumulator& a,
                                             const SoftMinAccumulator& b) {
  if (a.count_ == 0) return b;
  if (b.count_ == 0) return a;
  SoftMinAccumulator out(a.tau_);
  out.count_ = a.count_ + b.count_;
  out.shift_ = std::min(a.shift_, b.shift_);
  out.sum_ = a.sum_ * std::exp(out.shift_ - a.shift_) +
             b.sum_ * std::exp(out.shift_ - b.shift_);
  return out;
}

double SoftMinAccumulator::value() const {
  if (count_ == 0) throw InvalidParameter("soft-min of an empty sample");
  // sum_ >= 1 by construction, so the log is finite.
  return tau_ * (shift_ - std::log(sum_ / static_cast<double>(count_)));
}

double soft_min_mean(std::span<const double> q, double tau) {
  SoftMinAccumulator acc(tau);
  for (double v : q) acc.add(v);
  return acc.value();
}

double soft_min_weighted(std::span<const double> q, std::span<const double> w,
                         double tau) {
  if (q.empty()) throw InvalidParameter("empty action support");
  if (q.size() != w.size()) throw InvalidParameter("support and weights differ in length");
  double total = 0.0;
  for (double wi : w) {
    if (!(wi >= 0.0)) throw InvalidParameter("negative support weight");
    total += wi;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidParameter("support weights sum to " + std::to_string(total));
  }
  double shift = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!std::isfinite(q[i])) throw NumericDomainError("soft-Bellman input is not finite");
    if (w[i] > 0.0) shift = std::min(shift, q[i] / tau);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (w[i] > 0.0) sum += w[i] * std::exp(shift - q[i] / tau);
  }
  return tau * (shift - std::log(sum));
}

double bg_correction(std::span<const double> q, int k, double r, double tau) {
  if (k < 0) throw InvalidParameter("geometric level must be nonnegative");
  detail::check_bg_level(k);
  const std::size_t n = std::size_t{2} << k;
  if (q.size() != n) {
    throw InvalidParameter("expected 2^(k+1) values for the correction");
  }
  SoftMinAccumulator odd(tau);
  SoftMinAccumulator even(tau);
  for (std::size_t j = 0; j < n; ++j) ((j + 1) % 2 == 0 ? even : odd).add(q[j]);
  const double full = SoftMinAccumulator::merge(odd, even).value();
  return (full - 0.5 * (even.value() + odd.value())) / geometric_pmf(k, r);
}

int sample_geometric(double r, CounterEngine& rng) {
  if (!(r > 0.0 && r < 1.0)) {
    throw InvalidParameter("geometric success parameter must lie in (0, 1)");
  }
  std::geometric_distribution<int> dist(r);
  return dist(rng);
}

}  // namespace mlmcq
