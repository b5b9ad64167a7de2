#include "mlmcq/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mlmcq/errors.hpp"

namespace mlmcq {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid_parameter";
    case ErrorKind::NumericDomain: return "numeric_domain";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::Resource: return "resource";
    case ErrorKind::ContractionViolation: return "contraction_violation";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

ValueBounds derive_bounds(double c_min, double c_max, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw InvalidParameter("gamma must lie in [0, 1)");
  }
  if (!(c_min >= 0.0) || !(c_max >= 0.0)) {
    throw InvalidParameter("cost bounds must be nonnegative");
  }
  if (c_min > c_max) throw InvalidParameter("c_min exceeds c_max");
  return {c_min / (1.0 - gamma), c_max / (1.0 - gamma)};
}

double truncate(double x, double alpha, double beta) {
  if (alpha > beta) {
    std::ostringstream msg;
    msg << "truncation bounds out of order: alpha=" << alpha << " > beta=" << beta;
    throw InvalidParameter(msg.str());
  }
  return std::min(std::max(x, alpha), beta);
}

MdpSpec MdpSpec::bounded(double gamma, double tau, double c_min, double c_max) {
  const ValueBounds b = derive_bounds(c_min, c_max, gamma);
  MdpSpec spec{gamma, tau, c_min, c_max, b.alpha, b.beta, true};
  spec.validate();
  return spec;
}

MdpSpec MdpSpec::unbounded(double gamma, double tau) {
  MdpSpec spec;
  spec.gamma = gamma;
  spec.tau = tau;
  spec.c_min = 0.0;
  spec.c_max = INFINITY;
  spec.alpha = 0.0;
  spec.beta = INFINITY;
  spec.bounded_cost = false;
  spec.validate();
  return spec;
}

void MdpSpec::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidParameter("gamma must lie in [0, 1)");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidParameter("tau must be positive");
  if (!bounded_cost) return;
  const ValueBounds b = derive_bounds(c_min, c_max, gamma);
  const auto close = [](double x, double y) {
    return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(y));
  };
  if (!close(alpha, b.alpha) || !close(beta, b.beta)) {
    throw InvalidParameter("alpha/beta inconsistent with cost bounds");
  }
}

}  // namespace mlmcq
