#include "mlmcq/hyperparams.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mlmcq/errors.hpp"

namespace mlmcq {
namespace {

std::int64_t ceil_at_least_one(double x) {
  if (!std::isfinite(x)) throw ResourceError("schedule parameter is not finite");
  if (x > 9.0e18) throw ResourceError("schedule parameter overflows");
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(x)));
}

void check_common(double gamma, double alpha, double beta, double tau) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidParameter("gamma must lie in [0, 1)");
  if (!(tau > 0.0)) throw InvalidParameter("tau must be positive");
  if (alpha > beta) throw InvalidParameter("alpha exceeds beta");
}

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidParameter("epsilon must lie in (0, 1)");
}

void require_contraction(double gamma_L, const char* what) {
  if (!(gamma_L < 1.0)) {
    std::ostringstream msg;
    msg << what << ": gamma*L = " << gamma_L << " is not below 1";
    throw ContractionViolation(msg.str());
  }
}

}  // namespace

PlainConstants plain_constants(double alpha, double beta, double tau, double gamma) {
  check_common(gamma, alpha, beta, tau);
  PlainConstants out;
  out.L = std::exp((beta - alpha) / tau);
  out.L_prime = tau * std::expm1((beta - alpha) / tau);
  out.C = (beta - alpha) * (beta - alpha);
  out.gamma_L = gamma * out.L;
  out.contracts = out.gamma_L < 1.0;
  return out;
}

SimpleMcSchedule simple_mc_schedule(double epsilon, double gamma, double alpha, double beta,
                                    double tau, double e0) {
  check_epsilon(epsilon);
  const PlainConstants pc = plain_constants(alpha, beta, tau, gamma);
  require_contraction(pc.gamma_L, "simple MC schedule");
  SimpleMcSchedule out;
  if (e0 > 0.0 && pc.gamma_L > 0.0) {
    const double n = (std::log(epsilon) - std::log(3.0 * e0)) / std::log(pc.gamma_L);
    out.n = static_cast<int>(ceil_at_least_one(n));
  }
  const double one_minus = 1.0 - pc.gamma_L;
  out.M = ceil_at_least_one(9.0 * gamma * gamma * pc.C /
                            (one_minus * one_minus * epsilon * epsilon));
  out.K = ceil_at_least_one(3.0 * gamma * pc.L_prime * pc.L_prime /
                            (2.0 * tau * one_minus * epsilon));
  return out;
}

double lambda_m(double gamma, double L, std::int64_t M) {
  if (M < 1) throw InvalidParameter("M must be at least 1");
  const double m = static_cast<double>(M);
  return gamma * L + (1.0 + 2.0 * gamma * L) / std::sqrt(m) + std::sqrt(gamma) / std::pow(m, 0.25);
}

BranchingChoice lambda_and_m0(double gamma, double L) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidParameter("gamma must lie in [0, 1)");
  if (!(L >= 1.0)) throw InvalidParameter("L must be at least 1");
  const double gl = gamma * L;
  require_contraction(gl, "branching factor");
  const double root = (std::sqrt(gamma) + std::sqrt(gamma + 4.0 * (1.0 - gl) * (1.0 + 2.0 * gl))) /
                      (2.0 * (1.0 - gl));
  BranchingChoice out;
  out.M0_formula = ceil_at_least_one(std::pow(root, 4));
  out.M0 = out.M0_formula;
  while (lambda_m(gamma, L, out.M0) >= 1.0) ++out.M0;
  out.Lambda = lambda_m(gamma, L, out.M0);
  return out;
}

MlmcbSchedule mlmcb_schedule(double epsilon, double gamma, double alpha, double beta,
                             double tau) {
  check_epsilon(epsilon);
  const PlainConstants pc = plain_constants(alpha, beta, tau, gamma);
  require_contraction(pc.gamma_L, "MLMCb schedule");
  const BranchingChoice bc = lambda_and_m0(gamma, pc.L);
  MlmcbSchedule out;
  out.M0 = bc.M0;
  out.Lambda = bc.Lambda;
  out.D = 1.5 * std::max(beta - alpha, 2.0 * gamma * pc.L_prime);
  if (out.D > 0.0 && epsilon < out.D) {
    out.n = static_cast<int>(ceil_at_least_one(std::log(epsilon / out.D) / std::log(out.Lambda)));
  }
  out.C_tilde = 3.0 * gamma * pc.L_prime * pc.L_prime / (2.0 * tau * (1.0 - out.Lambda));
  out.K = ceil_at_least_one(out.C_tilde / epsilon);
  const double M = static_cast<double>(out.M0);
  const double K = static_cast<double>(out.K);
  out.cost_bound = std::pow(2.0, out.n + 2) * std::pow(K, out.n + 1) * std::pow(M, out.n);
  if (out.D > 0.0) {
    const double l = std::log(out.D);
    const double lp = std::log(out.Lambda);
    out.C_complexity = std::pow(2.0, -l / lp + 3) * std::pow(out.C_tilde + 1.0, -l / lp + 2) *
                       std::pow(M, -l / lp + 1);
    out.kappa = 4.0 - (2.0 * l + std::log(2.0) + std::log(M) + std::log(out.C_tilde + 1.0)) / lp;
  }
  return out;
}

MlmcuSchedule mlmcu_schedule(double epsilon, double gamma, double alpha, double beta,
                             double tau, double r, double L_bg) {
  if (!(epsilon > 0.0)) throw InvalidParameter("epsilon must be positive");
  check_common(gamma, alpha, beta, tau);
  if (!(r > 0.5 && r < 1.0)) throw InvalidParameter("r must lie in (1/2, 1)");
  const BranchingChoice bc = lambda_and_m0(gamma, L_bg);
  MlmcuSchedule out;
  out.r_outside_stable_range = r >= 0.75;
  out.M0 = bc.M0;
  out.Lambda = bc.Lambda;
  out.D = 1.5 * (beta - alpha) * std::max(1.0, 2.0 * gamma * L_bg);
  if (out.D > 0.0 && epsilon < out.D) {
    out.n = static_cast<int>(ceil_at_least_one(std::log(epsilon / out.D) / std::log(out.Lambda)));
  }
  out.C_num = 4.0 * r / (2.0 * r - 1.0);
  const double M = static_cast<double>(out.M0);
  out.expected_cost_bound = 2.0 * std::pow(out.C_num, out.n + 1) * std::pow(M, out.n);
  const double lp = std::log(out.Lambda);
  out.kappa = -std::log(M * out.C_num) / lp;
  if (out.D > 0.0) {
    out.C_complexity = 2.0 * out.C_num * std::pow(M * out.C_num, std::log(out.D) / lp);
  }
  return out;
}

double simple_mc_error_bound(double gamma, double alpha, double beta, double tau, int n,
                             std::int64_t M, std::int64_t K, double e0) {
  const PlainConstants pc = plain_constants(alpha, beta, tau, gamma);
  require_contraction(pc.gamma_L, "simple MC bound");
  if (n < 0 || M < 1 || K < 1) throw InvalidParameter("need n >= 0, M >= 1, K >= 1");
  const double one_minus = 1.0 - pc.gamma_L;
  return gamma * std::sqrt(pc.C) / (std::sqrt(static_cast<double>(M)) * one_minus) +
         gamma * pc.L_prime * pc.L_prime / (2.0 * tau * static_cast<double>(K) * one_minus) +
         std::pow(pc.gamma_L, n) * e0;
}

double mlmcb_error_bound(double gamma, double alpha, double beta, double tau, int n,
                         std::int64_t M, std::int64_t K, double e0) {
  const PlainConstants pc = plain_constants(alpha, beta, tau, gamma);
  require_contraction(pc.gamma_L, "MLMCb bound");
  if (n < 0 || M < 1 || K < 1) throw InvalidParameter("need n >= 0, M >= 1, K >= 1");
  const double lambda = lambda_m(gamma, pc.L, M);
  if (!(lambda < 1.0)) throw ContractionViolation("Lambda_M is not below 1 for this M");
  const double k = static_cast<double>(K);
  const double sigma = pc.L_prime / std::sqrt(k);
  const double delta = pc.L_prime * pc.L_prime / (2.0 * tau * k);
  return 1.5 * (std::max(e0, 2.0 * gamma * sigma) * std::pow(lambda, n) +
                gamma * delta / (1.0 - lambda));
}

double mlmcu_error_bound(double gamma, double alpha, double beta, double L_bg, int n,
                         std::int64_t M, double e0) {
  if (alpha > beta) throw InvalidParameter("alpha exceeds beta");
  require_contraction(gamma * L_bg, "MLMCu bound");
  if (n < 0 || M < 1) throw InvalidParameter("need n >= 0, M >= 1");
  const double lambda = lambda_m(gamma, L_bg, M);
  if (!(lambda < 1.0)) throw ContractionViolation("Lambda_M is not below 1 for this M");
  return 1.5 * std::max(e0, 2.0 * gamma * L_bg * (beta - alpha)) * std::pow(lambda, n);
}

double theoretical_error_bound(BoundMode mode, const BoundInputs& in) {
  switch (mode) {
    case BoundMode::SimpleMC:
      return simple_mc_error_bound(in.gamma, in.alpha, in.beta, in.tau, in.n, in.M, in.K, in.e0);
    case BoundMode::MLMCb:
      return mlmcb_error_bound(in.gamma, in.alpha, in.beta, in.tau, in.n, in.M, in.K, in.e0);
    case BoundMode::MLMCu:
      return mlmcu_error_bound(in.gamma, in.alpha, in.beta, in.L_bg, in.n, in.M, in.e0);
  }
  throw InvalidParameter("unknown bound mode");
}

namespace {

// (g(x) - g(y) + g'(y)(y - x)) / (y - x)^2 for g = -log.
double phi(double x, double y) {
  const double t = (x - y) / y;
  if (std::abs(t) < 1e-3) {
    return (0.5 - t / 3.0 + t * t / 4.0 - t * t * t / 5.0) / (y * y);
  }
  return (t - std::log1p(t)) / (y * y * t * t);
}

}  // namespace

BgLipschitzDiagnostic bg_lipschitz_diagnostic(double alpha, double beta, double tau, double r,
                                              int grid) {
  if (alpha > beta) throw InvalidParameter("alpha exceeds beta");
  if (!(tau > 0.0)) throw InvalidParameter("tau must be positive");
  if (!(r > 0.5 && r < 0.75)) throw InvalidParameter("diagnostic needs 1/2 < r < 3/4");
  if (grid < 2) throw InvalidParameter("grid needs at least 2 points");
  BgLipschitzDiagnostic out;
  out.A = std::exp(-beta / tau);
  out.B = std::exp(-alpha / tau);
  if (out.B > out.A) {
    const double h = (out.B - out.A) / (grid - 1);
    const auto at = [&](int i) { return out.A + h * i; };
    for (int i = 0; i < grid; ++i) {
      for (int j = 0; j < grid; ++j) {
        const double here = phi(at(i), at(j));
        if (i + 1 < grid) out.C1 = std::max(out.C1, std::abs(phi(at(i + 1), at(j)) - here) / h);
        if (j + 1 < grid) out.C1 = std::max(out.C1, std::abs(phi(at(i), at(j + 1)) - here) / h);
      }
    }
  }
  out.C2 = std::max(out.C1, 1.0 / (out.A * out.A));
  out.C_abt = 3.0 * out.C2 *
              std::max(std::pow(4.0, 6) * std::exp(-6.0 * alpha / tau),
                       std::pow(2.0, 4) * std::exp(-4.0 * alpha / tau));
  out.L_bg = 1.0 + std::sqrt(out.C_abt * 4.0 * (1.0 - r) / (3.0 * r - 4.0 * r * r));
  return out;
}

}  // namespace mlmcq
