#include <doctest.h>

#include <cmath>
#include <vector>

#include "mlmcq/bellman.hpp"
#include "mlmcq/errors.hpp"
#include "mlmcq/finite_mdp.hpp"
#include "mlmcq/models.hpp"

using namespace mlmcq;

namespace {

// Direct evaluation, no shifting: fine for the moderate inputs used here.
double naive_soft_min(const std::vector<double>& q, double tau) {
  double s = 0.0;
  for (double x : q) s += std::exp(-x / tau);
  return -tau * std::log(s / q.size());
}

}  // namespace

TEST_CASE("soft-min of a two-point uniform measure") {
  const std::vector<double> q = {0.0, 1.0};
  CHECK(soft_min_mean(q, 1.0) == doctest::Approx(0.3798854930417225).epsilon(1e-14));
  const std::vector<double> w = {0.5, 0.5};
  CHECK(soft_min_weighted(q, w, 1.0) == doctest::Approx(0.3798854930417225).epsilon(1e-14));
}

TEST_CASE("soft-min basic properties") {
  const std::vector<double> flat = {2.5, 2.5, 2.5};
  CHECK(soft_min_mean(flat, 0.3) == doctest::Approx(2.5));
  const std::vector<double> q = {0.2, 1.7, 0.9, 3.1};
  const double v = soft_min_mean(q, 0.7);
  CHECK(v == doctest::Approx(naive_soft_min(q, 0.7)).epsilon(1e-13));
  CHECK(v >= 0.2);
  CHECK(v <= (0.2 + 1.7 + 0.9 + 3.1) / 4);
  // shift equivariance
  std::vector<double> shifted = q;
  for (double& x : shifted) x += 10.0;
  CHECK(soft_min_mean(shifted, 0.7) == doctest::Approx(v + 10.0));
}

TEST_CASE("soft-min is stable far outside exp range") {
  const std::vector<double> q = {1e4, 1e4 + 1.0};
  CHECK(soft_min_mean(q, 1.0) == doctest::Approx(1e4 + 0.3798854930417225));
  const std::vector<double> neg = {-1e4, -1e4 + 1.0};
  CHECK(soft_min_mean(neg, 1.0) == doctest::Approx(-1e4 + 0.3798854930417225));
  const std::vector<double> tiny_tau = {1.0, 2.0};
  CHECK(soft_min_mean(tiny_tau, 1e-6) == doctest::Approx(1.0 + 1e-6 * std::log(2.0)));
}

TEST_CASE("accumulator merge equals one pass") {
  const std::vector<double> q = {0.1, 5.0, -2.0, 3.3, 0.0};
  SoftMinAccumulator a(1.5), b(1.5), all(1.5);
  for (std::size_t i = 0; i < q.size(); ++i) {
    (i % 2 ? a : b).add(q[i]);
    all.add(q[i]);
  }
  const auto m = SoftMinAccumulator::merge(a, b);
  CHECK(m.count() == 5);
  CHECK(m.value() == doctest::Approx(all.value()).epsilon(1e-14));
}

TEST_CASE("soft-min input validation") {
  SoftMinAccumulator acc(1.0);
  CHECK_THROWS_AS(acc.add(NAN), NumericDomainError);
  CHECK_THROWS_AS(acc.add(INFINITY), NumericDomainError);
  const std::vector<double> q = {1.0, 2.0};
  const std::vector<double> bad_w = {0.5, 0.6};
  CHECK_THROWS_AS(soft_min_weighted(q, bad_w, 1.0), InvalidParameter);
}

TEST_CASE("approximator spec validation") {
  CHECK_THROWS_AS(ApproximatorSpec::plain_mc(0).validate(), InvalidParameter);
  CHECK_THROWS_AS(ApproximatorSpec::blanchet_glynn(0.5).validate(), InvalidParameter);
  CHECK_THROWS_AS(ApproximatorSpec::blanchet_glynn(1.0).validate(), InvalidParameter);
  CHECK_NOTHROW(ApproximatorSpec::blanchet_glynn(0.6).validate());
  CHECK_FALSE(ApproximatorSpec::blanchet_glynn(0.6).outside_stable_range());
  CHECK(ApproximatorSpec::blanchet_glynn(0.8).outside_stable_range());
}

TEST_CASE("geometric level frequencies") {
  auto e = RngStream(11).engine();
  constexpr int n = 200000;
  const double r = 0.6;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < n; ++i) {
    const int k = sample_geometric(r, e);
    REQUIRE(k >= 0);
    if (k < 4) ++counts[k];
  }
  for (int k = 0; k < 4; ++k) {
    const double p = geometric_pmf(k, r);
    CHECK(std::abs(counts[k] / double(n) - p) < 5 * std::sqrt(p * (1 - p) / n));
  }
}

TEST_CASE("Blanchet-Glynn at level 0 matches the hand formula") {
  const GaussianActionModel model(1, 0.8);
  SampleLedger ledger;
  const Oracle<GaussianActionModel> oracle(model, ledger);
  std::vector<double> seen;
  const auto q = [&seen](int, const LqgVector& a, const RngStream&) {
    seen.push_back(a(0));
    return a(0);
  };
  const double r = 0.6, tau = 0.8;
  const double est = bg_apply_at_level(oracle, q, 0, r, 0, RngStream(21));
  REQUIRE(seen.size() == 3);
  CHECK(ledger.actions == 3);
  const double q0 = seen[0], q1 = seen[1], q2 = seen[2];
  const double full = -tau * std::log(0.5 * (std::exp(-q1 / tau) + std::exp(-q2 / tau)));
  // A_1 is odd, A_2 even; each half holds one point so its soft-min is the point
  const double hand = (full - 0.5 * (q1 + q2)) / r + q0;
  CHECK(est == doctest::Approx(hand).epsilon(1e-13));
}

TEST_CASE("Blanchet-Glynn draws 2^(k+1)+1 actions") {
  const FiniteMdp mdp = reference_instance(0.5, 1.0);
  for (int k = 0; k < 5; ++k) {
    SampleLedger ledger;
    const Oracle<FiniteMdp> oracle(mdp, ledger);
    const auto q = [](int, int a, const RngStream&) { return 0.1 * a; };
    bg_apply_at_level(oracle, q, 0, 0.6, k, RngStream(k));
    CHECK(ledger.actions == (std::uint64_t{2} << k) + 1);
  }
  SampleLedger ledger;
  const Oracle<FiniteMdp> oracle(mdp, ledger);
  const auto q = [](int, int, const RngStream&) { return 0.0; };
  CHECK_THROWS_AS(bg_apply_at_level(oracle, q, 0, 0.6, kMaxGeometricLevel + 1, RngStream(0)),
                  ResourceError);
}

TEST_CASE("Blanchet-Glynn is unbiased on a finite measure") {
  const FiniteMdp mdp = reference_instance(0.5, 1.0);
  SampleLedger ledger;
  const Oracle<FiniteMdp> oracle(mdp, ledger);
  const std::vector<double> qv = {0.0, 1.0, 2.5};
  const auto q = [&qv](int, int a, const RngStream&) { return qv[a]; };
  const double exact = soft_min_mean(qv, 1.0);
  const RngStream root(99);
  constexpr int n = 100000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = bg_apply(oracle, q, 0, 0.6, root.child(i));
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::abs(mean - exact) < 4 * se);
}

TEST_CASE("plain MC diff on identical inputs is exactly zero") {
  const FiniteMdp mdp = reference_instance(0.5, 1.0);
  SampleLedger ledger;
  const Oracle<FiniteMdp> oracle(mdp, ledger);
  const auto q = [](int, int a, const RngStream&) { return 0.3 * a; };
  CHECK(plain_mc_diff(oracle, q, q, 0, 6, RngStream(1)) == 0.0);
  CHECK(bg_diff(oracle, q, q, 0, 0.6, RngStream(2)) == 0.0);
}

TEST_CASE("plain MC draws K actions and shares them across a diff") {
  const FiniteMdp mdp = reference_instance(0.5, 1.0);
  SampleLedger ledger;
  const Oracle<FiniteMdp> oracle(mdp, ledger);
  std::vector<int> a1, a2;
  const auto q1 = [&a1](int, int a, const RngStream&) { a1.push_back(a); return 1.0 * a; };
  const auto q2 = [&a2](int, int a, const RngStream&) { a2.push_back(a); return 2.0 * a; };
  plain_mc_diff(oracle, q1, q2, 0, 9, RngStream(5));
  CHECK(ledger.actions == 9);
  CHECK(a1 == a2);
}

TEST_CASE("exact approximator sums over the support") {
  const FiniteMdp mdp = reference_instance(0.5, 1.0);
  const auto q = [](int, int a, const RngStream&) { return 0.5 * a; };
  const auto& support = mdp.action_support();
  const double v = exact_soft_bellman(q, 0, std::span(support), 1.0, RngStream(0));
  CHECK(v == doctest::Approx(naive_soft_min({0.0, 0.5, 1.0}, 1.0)));
}

TEST_CASE("Blanchet-Glynn passes constants and shifts through exactly") {
  const GaussianActionModel model(2, 1.0);
  SampleLedger ledger;
  const Oracle<GaussianActionModel> oracle(model, ledger);
  const auto c = [](int, const LqgVector&, const RngStream&) { return 1.75; };
  const auto q2 = [](int, const LqgVector& a, const RngStream&) { return a(0) - 0.5 * a(1); };
  const double delta = 0.37;
  const auto q1 = [&](int s, const LqgVector& a, const RngStream& r) { return q2(s, a, r) + delta; };
  for (int i = 0; i < 50; ++i) {
    const RngStream st = RngStream(31).child(i);
    CHECK(bg_apply(oracle, c, 0, 0.6, st) == doctest::Approx(1.75).epsilon(1e-14));
    CHECK(bg_diff(oracle, q1, q2, 0, 0.6, st) == doctest::Approx(delta).epsilon(1e-9));
  }
}

TEST_CASE("Blanchet-Glynn on N(0,1) with q(a) = a") {
  const GaussianActionModel model(1, 1.0);
  SampleLedger ledger;
  const Oracle<GaussianActionModel> oracle(model, ledger);
  const auto q = [](int, const LqgVector& a, const RngStream&) { return a(0); };
  constexpr int n = 100000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = bg_apply(oracle, q, 0, 0.6, RngStream(77).child(i));
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::abs(mean + 0.5) < 3 * se);
}

TEST_CASE("Blanchet-Glynn difference is unbiased on the Gaussian-linear case") {
  const GaussianActionModel model(2, 1.0);
  SampleLedger ledger;
  const Oracle<GaussianActionModel> oracle(model, ledger);
  // T(b'a) = -|b|^2 / 2 for tau = 1
  const auto q1 = [](int, const LqgVector& a, const RngStream&) { return 0.6 * a(0) + 0.2 * a(1); };
  const auto q2 = [](int, const LqgVector& a, const RngStream&) { return -0.3 * a(1); };
  const double exact = -0.5 * (0.36 + 0.04) + 0.5 * 0.09;
  constexpr int n = 100000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = bg_diff(oracle, q1, q2, 0, 0.6, RngStream(78).child(i));
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::abs(mean - exact) < 3 * se);
}

TEST_CASE("plain MC overestimates and stays inside the q range") {
  const FiniteMdp mdp = reference_instance(0.5, 1.0);
  SampleLedger ledger;
  const Oracle<FiniteMdp> oracle(mdp, ledger);
  const std::vector<double> qv = {0.2, 1.4, 0.9};
  const auto q = [&qv](int, int a, const RngStream&) { return qv[a]; };
  const double exact = soft_min_mean(qv, 1.0);
  for (int K : {1, 2, 5, 20}) {
    constexpr int n = 20000;
    double s = 0, s2 = 0, lo = 1e9, hi = -1e9;
    for (int i = 0; i < n; ++i) {
      const double x = plain_mc_apply(oracle, q, 0, K, RngStream(K).child(i));
      s += x;
      s2 += x * x;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(mean >= exact - 3 * se);
    CHECK(lo >= 0.2);
    CHECK(hi <= 1.4);
  }
}

TEST_CASE("approximator differences scale with the input perturbation") {
  // RMS(apply(q + e h) - apply(q)) / RMS(e h) settles to a finite constant.
  const GaussianActionModel model(1, 1.0);
  SampleLedger ledger;
  const Oracle<GaussianActionModel> oracle(model, ledger);
  const auto q = [](int, const LqgVector& a, const RngStream&) { return std::tanh(a(0)); };
  std::vector<double> ratios;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const auto qe = [eps](int, const LqgVector& a, const RngStream&) {
      return std::tanh(a(0)) + eps * std::cos(a(0));
    };
    constexpr int n = 20000;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
      const RngStream st = RngStream(55).child(i);
      const double d = bg_diff(oracle, qe, q, 0, 0.6, st);
      num += d * d;
      auto e = st.child(0).engine();
      const double a = model.reference_action(e)(0);
      den += eps * eps * std::cos(a) * std::cos(a);
    }
    ratios.push_back(std::sqrt(num / den));
  }
  for (double r : ratios) CHECK(std::isfinite(r));
  CHECK(ratios[2] == doctest::Approx(ratios[1]).epsilon(0.1));
}

TEST_CASE("plain MC diff passes a constant shift through") {
  const FiniteMdp mdp = reference_instance(0.5, 1.0);
  SampleLedger ledger;
  const Oracle<FiniteMdp> oracle(mdp, ledger);
  const auto q2 = [](int, int a, const RngStream&) { return 0.4 * a; };
  const auto q1 = [](int, int a, const RngStream&) { return 0.4 * a + 0.25; };
  for (int K : {1, 3, 10}) {
    CHECK(plain_mc_diff(oracle, q1, q2, 0, K, RngStream(K)) == doctest::Approx(0.25).epsilon(1e-12));
  }
}

TEST_CASE("shared-sample diff has less variance than independent applications") {
  const FiniteMdp mdp = reference_instance(0.5, 1.0);
  SampleLedger ledger;
  const Oracle<FiniteMdp> oracle(mdp, ledger);
  const std::vector<double> v2 = {0.0, 1.0, 2.0}, v1 = {0.1, 1.05, 1.9};
  const auto q1 = [&v1](int, int a, const RngStream&) { return v1[a]; };
  const auto q2 = [&v2](int, int a, const RngStream&) { return v2[a]; };
  constexpr int n = 10000;
  double sd = 0, sdd = 0, si = 0, sii = 0;
  for (int i = 0; i < n; ++i) {
    const RngStream st = RngStream(808).child(i);
    const double d = plain_mc_diff(oracle, q1, q2, 0, 4, st);
    const double ind = plain_mc_apply(oracle, q1, 0, 4, st.child(0)) -
                       plain_mc_apply(oracle, q2, 0, 4, st.child(1));
    sd += d;
    sdd += d * d;
    si += ind;
    sii += ind * ind;
  }
  CHECK(sdd / n - (sd / n) * (sd / n) <= sii / n - (si / n) * (si / n));
}
