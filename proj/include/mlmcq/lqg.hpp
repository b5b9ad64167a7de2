#pragma once

// Entropy-regularized discounted linear-quadratic problem with Gaussian noise
// and Gaussian reference measure N(0, I).

#include <Eigen/Dense>

#include "mlmcq/mdp.hpp"
#include "mlmcq/rng.hpp"

namespace mlmcq {

// Inline storage up to 64 entries keeps the estimator hot loop off the heap.
using LqgVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 64, 1>;

struct LqgProblem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd R1;
  Eigen::MatrixXd R2;
  double gamma = 0.5;
  double tau = 1.0;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index action_dim() const { return B.cols(); }

  /// Shapes, gamma in (0, 1), tau > 0, R1 and R2 symmetric PSD (1e-10).
  void validate() const;
};

struct TestMatrices {
  Eigen::MatrixXd A, B, R1, R2;
};

/// A = I, B = I + eps * (superdiagonal with wraparound), R1 = R2 = I / d.
/// For d = 1 the wraparound entry lands on the diagonal, so B = 1 + eps.
TestMatrices paper_test_matrices(int d, double eps);

/// Benchmark problem: test matrices with tau = 1 / (1 - gamma).
LqgProblem benchmark_problem(int d, double eps, double gamma);

struct RiccatiSolution {
  Eigen::MatrixXd P;
  double c = 0.0;
  Eigen::MatrixXd gain;   // policy mean is gain * s
  Eigen::MatrixXd Sigma;  // policy covariance
  long iterations = 0;
  double residual = 0.0;  // sup-norm of P - rhs(P)
};

/// Right-hand side of the Riccati fixed-point map.
Eigen::MatrixXd riccati_rhs(const LqgProblem& problem, const Eigen::MatrixXd& P);

/// Fixed-point iteration from P = R1, symmetrized every step.
/// Throws ConvergenceError with the last update size after max_iter steps.
RiccatiSolution riccati_solve(const LqgProblem& problem, double tol = 1e-12,
                              long max_iter = 1000000);

/// s'R1 s + a'R2 a + gamma [(As + Ba)' P (As + Ba) + tr P + c].
double reference_q(const LqgProblem& problem, const RiccatiSolution& sol,
                   const Eigen::VectorXd& s, const Eigen::VectorXd& a);

/// Optimal soft value s'P s + c.
double reference_value(const RiccatiSolution& sol, const Eigen::VectorXd& s);

class LqgModel {
 public:
  using State = LqgVector;
  using Action = LqgVector;

  explicit LqgModel(LqgProblem problem);

  State sample_transition(const State& s, const Action& a, CounterEngine& rng) const;
  double cost(const State& s, const Action& a) const;
  Action reference_action(CounterEngine& rng) const;
  const MdpSpec& spec() const { return spec_; }
  const LqgProblem& problem() const { return problem_; }

 private:
  LqgProblem problem_;
  MdpSpec spec_;
  // Shortcuts for the common A = I and scalar R1, R2 cases.
  bool a_identity_ = false;
  bool r_scalar_ = false;
  double r1_scale_ = 0.0;
  double r2_scale_ = 0.0;
};

}  // namespace mlmcq
