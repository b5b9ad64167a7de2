#include "mlmcq/estimators.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace mlmcq {
namespace {

void check_cost_args(int n, int M) {
  if (n < 0) throw InvalidParameter("level n must be nonnegative");
  if (M < 1) throw InvalidParameter("branching M must be at least 1");
}

std::uint64_t mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out;
  if (__builtin_mul_overflow(a, b, &out)) throw ResourceError("cost overflows 64 bits");
  return out;
}

std::uint64_t add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out;
  if (__builtin_add_overflow(a, b, &out)) throw ResourceError("cost overflows 64 bits");
  return out;
}

}  // namespace

std::uint64_t mlmcb_cost(int n, int M, int K) {
  check_cost_args(n, M);
  if (K < 1) throw InvalidParameter("K must be at least 1");
  const std::uint64_t m = static_cast<std::uint64_t>(M);
  const std::uint64_t k = static_cast<std::uint64_t>(K);
  std::vector<std::uint64_t> c(static_cast<std::size_t>(n) + 1, 0);
  for (int j = 1; j <= n; ++j) {
    std::uint64_t pw = 1;
    for (int t = 0; t < j; ++t) pw = mul(pw, m);
    std::uint64_t total = mul(pw, k + 1);
    for (int l = 1; l < j; ++l) {
      std::uint64_t reps = 1;
      for (int t = 0; t < j - l; ++t) reps = mul(reps, m);
      const std::uint64_t inner = add(1, mul(k, add(add(c[l], c[l - 1]), 1)));
      total = add(total, mul(reps, inner));
    }
    c[j] = total;
  }
  return c[n];
}

double mlmc_cost_real(int n, int M, double K) {
  check_cost_args(n, M);
  std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
  for (int j = 1; j <= n; ++j) {
    double total = std::pow(M, j) * (K + 1.0);
    for (int l = 1; l < j; ++l) {
      total += std::pow(M, j - l) * (1.0 + K * (c[l] + c[l - 1] + 1.0));
    }
    c[j] = total;
  }
  return c[n];
}

double mlmcu_expected_cost(int n, int M, double r) {
  if (!(r > 0.5 && r < 1.0)) {
    throw InvalidParameter("expected Blanchet-Glynn cost is infinite unless 1/2 < r < 1");
  }
  return mlmc_cost_real(n, M, 2.0 * r / (2.0 * r - 1.0) + 1.0);
}

SampleLedger iterative_mc_cost(int n, int M, int K) {
  check_cost_args(n, M);
  if (K < 1) throw InvalidParameter("K must be at least 1");
  const std::uint64_t m = static_cast<std::uint64_t>(M);
  const std::uint64_t mk = mul(m, static_cast<std::uint64_t>(K));
  SampleLedger out;
  for (int j = 1; j <= n; ++j) {
    out.transitions = add(m, mul(mk, out.transitions));
    out.actions = add(mk, mul(mk, out.actions));
  }
  return out;
}

}  // namespace mlmcq
