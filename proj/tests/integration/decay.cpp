// Desk-scale version of the geometric decay study: same instance family and
// branching factor, fewer inner draws so levels 1..4 finish in minutes.

#include <doctest.h>

#include "mlmcq/hyperparams.hpp"
#include "mlmcq/verify.hpp"

using namespace mlmcq;

TEST_CASE("MLMCb error decays geometrically and stays under its bound") {
  const FiniteMdp mdp = reference_instance(0.2, 5.0);
  const auto& spec = mdp.spec();
  const auto pc = plain_constants(spec.alpha, spec.beta, spec.tau, spec.gamma);
  const auto bc = lambda_and_m0(spec.gamma, pc.L);
  REQUIRE(bc.Lambda < 1.0);

  const auto study = verify::decay_study(mdp, static_cast<int>(bc.M0), 4, 100, 4, 2718, 1);
  MESSAGE(study.describe());
  CHECK(study.lambda_hat < 1.0);
  for (std::size_t i = 0; i < study.rms_error.size(); ++i) {
    CHECK(study.rms_error[i] <= study.bound[i]);
  }
}
