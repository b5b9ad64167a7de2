#pragma once

// Hyperparameter schedules, error bounds and complexity bounds.
//
// All multilevel bounds use the surrogate gamma_tilde = 2 gamma for the
// truncation-tail factor, which is what every printed bound reduces to.

#include <cstdint>
#include <string>

namespace mlmcq {

struct PlainConstants {
  double L = 1.0;        // exp((beta - alpha) / tau)
  double L_prime = 0.0;  // tau (L - 1)
  double C = 0.0;        // (beta - alpha)^2
  double gamma_L = 0.0;
  bool contracts = true;  // gamma L < 1
};

PlainConstants plain_constants(double alpha, double beta, double tau, double gamma);

struct SimpleMcSchedule {
  int n = 1;
  std::int64_t M = 1;
  std::int64_t K = 1;
};

/// Throws ContractionViolation if gamma L >= 1.
SimpleMcSchedule simple_mc_schedule(double epsilon, double gamma, double alpha, double beta,
                                    double tau, double e0);

/// gamma L + (1 + 2 gamma L)/sqrt(M) + sqrt(gamma)/M^(1/4).
double lambda_m(double gamma, double L, std::int64_t M);

struct BranchingChoice {
  std::int64_t M0 = 1;          // smallest admissible branching factor
  std::int64_t M0_formula = 1;  // the closed-form ceiling, before the Lambda < 1 check
  double Lambda = 0.0;          // lambda_m at M0
};

/// Closed-form M0, bumped by one while Lambda_{M0} >= 1 (only happens when
/// the ceiling hits the root exactly, e.g. gamma = 0).
BranchingChoice lambda_and_m0(double gamma, double L);

struct MlmcbSchedule {
  int n = 1;
  std::int64_t M0 = 1;
  std::int64_t K = 1;
  double Lambda = 0.0;
  double D = 0.0;
  double cost_bound = 0.0;  // 2^(n+2) K^(n+1) M0^n
  double C_tilde = 0.0;
  double C_complexity = 0.0;
  double kappa = 0.0;
};

MlmcbSchedule mlmcb_schedule(double epsilon, double gamma, double alpha, double beta,
                             double tau);

struct MlmcuSchedule {
  int n = 1;
  std::int64_t M0 = 1;
  double Lambda = 0.0;
  double D = 0.0;
  double C_num = 0.0;               // 4r / (2r - 1)
  double expected_cost_bound = 0.0;  // 2 C_num^(n+1) M0^n
  double C_complexity = 0.0;
  double kappa = 0.0;
  bool r_outside_stable_range = false;  // r >= 3/4
};

/// L_bg is supplied by the caller; see bg_lipschitz_diagnostic for an estimate.
MlmcuSchedule mlmcu_schedule(double epsilon, double gamma, double alpha, double beta,
                             double tau, double r, double L_bg);

// Error bounds. e0 is a bound on sup |Q0 - Q*|.

double simple_mc_error_bound(double gamma, double alpha, double beta, double tau, int n,
                             std::int64_t M, std::int64_t K, double e0);

double mlmcb_error_bound(double gamma, double alpha, double beta, double tau, int n,
                         std::int64_t M, std::int64_t K, double e0);

double mlmcu_error_bound(double gamma, double alpha, double beta, double L_bg, int n,
                         std::int64_t M, double e0);

enum class BoundMode { SimpleMC, MLMCb, MLMCu };

struct BoundInputs {
  double gamma = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double tau = 1.0;
  int n = 0;
  std::int64_t M = 1;
  std::int64_t K = 1;  // SimpleMC, MLMCb
  double L_bg = 1.0;   // MLMCu
  double e0 = 0.0;
};

double theoretical_error_bound(BoundMode mode, const BoundInputs& in);

struct BgLipschitzDiagnostic {
  double A = 0.0;  // exp(-beta / tau)
  double B = 0.0;  // exp(-alpha / tau)
  double C1 = 0.0;
  double C2 = 0.0;
  double C_abt = 0.0;
  double L_bg = 0.0;
};

/// Grid estimate of the Blanchet-Glynn Lipschitz constant. C1 is a supremum
/// with no closed form; the grid value is a lower estimate, so treat the
/// result as indicative only.
BgLipschitzDiagnostic bg_lipschitz_diagnostic(double alpha, double beta, double tau, double r,
                                              int grid = 200);

}  // namespace mlmcq
