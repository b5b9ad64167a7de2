#include <doctest.h>

#include <cmath>
#include <vector>

#include "mlmcq/errors.hpp"
#include "mlmcq/estimators.hpp"
#include "mlmcq/finite_mdp.hpp"

using namespace mlmcq;

namespace {

// Independent statement of the multilevel cost recursion:
// c_0 = 0, c_n = sum_{l<n} M^(n-l) (1 + K + K (c_l + c_{l-1})), c_{-1} = 0.
double cost_oracle(int n, double M, double K) {
  std::vector<double> c(n + 1, 0.0);
  for (int m = 1; m <= n; ++m) {
    for (int l = 0; l < m; ++l) {
      const double inner = l == 0 ? 0.0 : c[l] + c[l - 1];
      c[m] += std::pow(M, m - l) * (1.0 + K + K * inner);
    }
  }
  return c[n];
}

}  // namespace

TEST_CASE("MLMCb cost recursion") {
  const std::uint64_t expected[] = {0, 21, 462, 10017, 216846, 4694025, 101610390};
  for (int n = 0; n <= 6; ++n) CHECK(mlmcb_cost(n, 7, 2) == expected[n]);
  CHECK(mlmcb_cost(1, 2, 3) == 8);
  CHECK(mlmcb_cost(2, 2, 3) == 72);
  for (int n = 0; n <= 5; ++n) {
    for (int M = 1; M <= 4; ++M) {
      for (int K = 1; K <= 4; ++K) {
        CHECK(double(mlmcb_cost(n, M, K)) == doctest::Approx(cost_oracle(n, M, K)));
        CHECK(mlmc_cost_real(n, M, K) == doctest::Approx(double(mlmcb_cost(n, M, K))));
      }
    }
  }
  CHECK_THROWS_AS(mlmcb_cost(12, 1000, 1000), ResourceError);
}

TEST_CASE("MLMCu expected cost") {
  CHECK(mlmcu_expected_cost(1, 2, 0.75) == doctest::Approx(10.0));
  CHECK(mlmcu_expected_cost(3, 3, 0.6) == doctest::Approx(14928.0));
  const double kbar = 2 * 0.6 / (2 * 0.6 - 1) + 1;
  CHECK(mlmcu_expected_cost(4, 7, 0.6) == doctest::Approx(cost_oracle(4, 7, kbar)));
  CHECK_THROWS_AS(mlmcu_expected_cost(2, 2, 0.5), InvalidParameter);
}

TEST_CASE("iterative MC cost closed form") {
  for (int n = 0; n <= 4; ++n) {
    for (int M = 1; M <= 3; ++M) {
      for (int K = 1; K <= 3; ++K) {
        std::uint64_t t = 0, a = 0, p = 1;
        for (int j = 0; j < n; ++j) {
          t += M * p;
          p *= std::uint64_t(M) * K;
          a += p;
        }
        CHECK(iterative_mc_cost(n, M, K) == SampleLedger{t, a});
      }
    }
  }
}

TEST_CASE("level 0 returns the truncated initial guess and draws nothing") {
  const FiniteMdp mdp = reference_instance(0.5, 1.0);
  auto p = EstimatorParams<FiniteMdp>::defaults(mdp, 0, 3, ApproximatorSpec::plain_mc(2));
  auto r = mlmc(mdp, p, 0, 0, RngStream(1));
  CHECK(r.value == doctest::Approx(1.0));  // midpoint of [0, 2]
  CHECK(r.ledger.total() == 0);

  p.q0 = [](int, int) { return 5.0; };
  r = mlmc(mdp, p, 0, 0, RngStream(1));
  CHECK(r.value == doctest::Approx(2.0));
}

TEST_CASE("ledgers match the recursions") {
  const FiniteMdp mdp = reference_instance(0.5, 1.0);
  for (int n = 1; n <= 3; ++n) {
    const auto p = EstimatorParams<FiniteMdp>::defaults(mdp, n, 3, ApproximatorSpec::plain_mc(2));
    CHECK(mlmc(mdp, p, 1, 2, RngStream(n)).ledger.total() == mlmcb_cost(n, 3, 2));
    CHECK(iterative_mc(mdp, p, 1, 2, RngStream(n)).ledger == iterative_mc_cost(n, 3, 2));
  }
}

TEST_CASE("estimates are deterministic in the stream") {
  const FiniteMdp mdp = reference_instance(0.5, 1.0);
  const auto p = EstimatorParams<FiniteMdp>::defaults(mdp, 3, 2, ApproximatorSpec::blanchet_glynn(0.6));
  const auto a = mlmc(mdp, p, 0, 0, RngStream(7).child(1));
  const auto b = mlmc(mdp, p, 0, 0, RngStream(7).child(1));
  const auto c = mlmc(mdp, p, 0, 0, RngStream(7).child(2));
  CHECK(a.value == b.value);
  CHECK(a.ledger == b.ledger);
  CHECK(a.value != c.value);
  CHECK(a.path == std::vector<std::int64_t>{1});
}

TEST_CASE("truncation keeps estimates inside the value range") {
  const FiniteMdp mdp = reference_instance(0.5, 1.0);
  const auto p = EstimatorParams<FiniteMdp>::defaults(mdp, 3, 2, ApproximatorSpec::blanchet_glynn(0.6));
  for (int i = 0; i < 200; ++i) {
    const double v = mlmc(mdp, p, i % 3, (i / 3) % 3, RngStream(i)).value;
    CHECK(v >= 0.0);
    CHECK(v <= 2.0);
  }
}

TEST_CASE("MLMC with the exact operator concentrates on Q*") {
  const FiniteMdp mdp = reference_instance(0.3, 1.0);
  const double qstar = value_iteration(mdp)[0][0];
  const auto p = EstimatorParams<FiniteMdp>::defaults(mdp, 4, 2, ApproximatorSpec::exact());
  double s = 0.0;
  constexpr int n = 200;
  for (int i = 0; i < n; ++i) s += mlmc(mdp, p, 0, 0, RngStream(5).child(i)).value;
  CHECK(std::abs(s / n - qstar) < 0.03);
}

TEST_CASE("parameter validation") {
  const FiniteMdp mdp = reference_instance(0.5, 1.0);
  auto p = EstimatorParams<FiniteMdp>::defaults(mdp, 11, 2, ApproximatorSpec::plain_mc(1));
  CHECK_THROWS_AS(mlmc(mdp, p, 0, 0, RngStream(0)), ResourceError);
  p.n = 2;
  p.M = 0;
  CHECK_THROWS_AS(mlmc(mdp, p, 0, 0, RngStream(0)), InvalidParameter);
  p.M = 2;
  p.approximator = ApproximatorSpec::blanchet_glynn(0.6);
  CHECK_THROWS_AS(iterative_mc(mdp, p, 0, 0, RngStream(0)), InvalidParameter);
}

TEST_CASE("estimates from sibling streams are uncorrelated") {
  const FiniteMdp mdp = reference_instance(0.5, 5.0);
  const auto p = EstimatorParams<FiniteMdp>::defaults(mdp, 2, 2, ApproximatorSpec::blanchet_glynn(0.6));
  constexpr int n = 1000;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const RngStream parent = RngStream(404).child(i);
    const double x = mlmc(mdp, p, 0, 0, parent.child(0)).value;
    const double y = mlmc(mdp, p, 0, 0, parent.child(1)).value;
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  const double cov = sxy / n - sx * sy / n / n;
  const double rho = cov / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
  CHECK(std::abs(rho) < 0.05);
}
