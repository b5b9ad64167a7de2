#include "mlmcq/lqg.hpp"

#include <cmath>
#include <string>

#include "mlmcq/errors.hpp"

namespace mlmcq {
namespace {

void check_sym_psd(const Eigen::MatrixXd& m, const char* name) {
  if (m.rows() != m.cols()) throw InvalidParameter(std::string(name) + " must be square");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw InvalidParameter(std::string(name) + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10) {
    throw InvalidParameter(std::string(name) + " is not positive semidefinite");
  }
}

Eigen::MatrixXd inner_matrix(const LqgProblem& pr, const Eigen::MatrixXd& P) {
  return pr.R2 + pr.gamma * pr.B.transpose() * P * pr.B;
}

}  // namespace

void LqgProblem::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidParameter("gamma must lie in (0, 1)");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidParameter("tau must be positive");
  if (A.rows() == 0 || A.rows() != A.cols()) throw InvalidParameter("A must be square and nonempty");
  if (B.rows() != A.rows() || B.cols() == 0) throw InvalidParameter("B has the wrong shape");
  if (R1.rows() != A.rows()) throw InvalidParameter("R1 has the wrong shape");
  if (R2.rows() != B.cols()) throw InvalidParameter("R2 has the wrong shape");
  if (A.rows() > 64 || B.cols() > 64) throw InvalidParameter("dimensions above 64 are not supported");
  check_sym_psd(R1, "R1");
  check_sym_psd(R2, "R2");
}

TestMatrices paper_test_matrices(int d, double eps) {
  if (d < 1) throw InvalidParameter("dimension must be at least 1");
  TestMatrices out;
  out.A = Eigen::MatrixXd::Identity(d, d);
  out.B = Eigen::MatrixXd::Identity(d, d);
  for (int i = 0; i < d; ++i) out.B(i, (i + 1) % d) += eps;
  out.R1 = Eigen::MatrixXd::Identity(d, d) / d;
  out.R2 = out.R1;
  return out;
}

LqgProblem benchmark_problem(int d, double eps, double gamma) {
  const TestMatrices m = paper_test_matrices(d, eps);
  LqgProblem p{m.A, m.B, m.R1, m.R2, gamma, 1.0 / (1.0 - gamma)};
  p.validate();
  return p;
}

Eigen::MatrixXd riccati_rhs(const LqgProblem& pr, const Eigen::MatrixXd& P) {
  const Eigen::Index da = pr.action_dim();
  const Eigen::MatrixXd inner =
      inner_matrix(pr, P) + 0.5 * pr.tau * Eigen::MatrixXd::Identity(da, da);
  const Eigen::MatrixXd bpa = pr.B.transpose() * P * pr.A;
  return pr.R1 + pr.gamma * pr.A.transpose() * P * pr.A -
         pr.gamma * pr.gamma * bpa.transpose() * inner.llt().solve(bpa);
}

RiccatiSolution riccati_solve(const LqgProblem& pr, double tol, long max_iter) {
  pr.validate();
  if (!(tol > 0.0)) throw InvalidParameter("tolerance must be positive");
  if (max_iter < 1) throw InvalidParameter("max_iter must be positive");
  RiccatiSolution sol;
  Eigen::MatrixXd P = pr.R1;
  double delta = INFINITY;
  for (long it = 1; it <= max_iter; ++it) {
    Eigen::MatrixXd next = riccati_rhs(pr, P);
    next = 0.5 * (next + next.transpose()).eval();
    if (!next.allFinite()) throw NumericDomainError("Riccati iterate is not finite");
    delta = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    sol.iterations = it;
    if (delta < tol) break;
  }
  if (!(delta < tol)) throw ConvergenceError("Riccati iteration did not converge", delta);

  const Eigen::Index da = pr.action_dim();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(da, da);
  const Eigen::MatrixXd H = inner_matrix(pr, P);
  const Eigen::MatrixXd inner = H + 0.5 * pr.tau * I;
  const Eigen::MatrixXd scaled = I + (2.0 / pr.tau) * H;
  const Eigen::LLT<Eigen::MatrixXd> chol(scaled);
  if (chol.info() != Eigen::Success) throw NumericDomainError("policy precision is not positive definite");
  const double logdet = 2.0 * chol.matrixL().toDenseMatrix().diagonal().array().log().sum();

  sol.P = P;
  sol.c = (pr.gamma * P.trace() + 0.5 * pr.tau * logdet) / (1.0 - pr.gamma);
  sol.gain = -pr.gamma * inner.llt().solve(pr.B.transpose() * P * pr.A);
  sol.Sigma = chol.solve(I);
  sol.residual = (P - riccati_rhs(pr, P)).cwiseAbs().maxCoeff();
  return sol;
}

double reference_q(const LqgProblem& pr, const RiccatiSolution& sol, const Eigen::VectorXd& s,
                   const Eigen::VectorXd& a) {
  if (s.size() != pr.state_dim() || a.size() != pr.action_dim()) {
    throw InvalidParameter("state or action has the wrong dimension");
  }
  const Eigen::VectorXd next = pr.A * s + pr.B * a;
  return s.dot(pr.R1 * s) + a.dot(pr.R2 * a) +
         pr.gamma * (next.dot(sol.P * next) + sol.P.trace() + sol.c);
}

double reference_value(const RiccatiSolution& sol, const Eigen::VectorXd& s) {
  if (s.size() != sol.P.rows()) throw InvalidParameter("state has the wrong dimension");
  return s.dot(sol.P * s) + sol.c;
}

LqgModel::LqgModel(LqgProblem problem)
    : problem_(std::move(problem)), spec_(MdpSpec::unbounded(problem_.gamma, problem_.tau)) {
  problem_.validate();
  const Eigen::Index d = problem_.state_dim();
  a_identity_ = problem_.A == Eigen::MatrixXd::Identity(d, d);
  const Eigen::Index da = problem_.action_dim();
  r1_scale_ = problem_.R1(0, 0);
  r2_scale_ = problem_.R2(0, 0);
  r_scalar_ = problem_.R1 == r1_scale_ * Eigen::MatrixXd::Identity(d, d) &&
              problem_.R2 == r2_scale_ * Eigen::MatrixXd::Identity(da, da);
}

LqgModel::State LqgModel::sample_transition(const State& s, const Action& a,
                                            CounterEngine& rng) const {
  State next(problem_.state_dim());
  rng.fill_normal({next.data(), static_cast<std::size_t>(next.size())});
  if (a_identity_) {
    next += s;
  } else {
    next.noalias() += problem_.A * s;
  }
  next.noalias() += problem_.B * a;
  return next;
}

double LqgModel::cost(const State& s, const Action& a) const {
  if (r_scalar_) return r1_scale_ * s.squaredNorm() + r2_scale_ * a.squaredNorm();
  LqgVector rs(s.size());
  rs.noalias() = problem_.R1 * s;
  LqgVector ra(a.size());
  ra.noalias() = problem_.R2 * a;
  return s.dot(rs) + a.dot(ra);
}

LqgModel::Action LqgModel::reference_action(CounterEngine& rng) const {
  Action a(problem_.action_dim());
  rng.fill_normal({a.data(), static_cast<std::size_t>(a.size())});
  return a;
}

}  // namespace mlmcq
