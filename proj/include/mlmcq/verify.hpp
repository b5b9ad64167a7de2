#pragma once

// Acceptance checks shared by the acceptance binary and `mlmcq verify`.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mlmcq/finite_mdp.hpp"

namespace mlmcq::verify {

struct Options {
  int workers = 1;
  // Criteria whose projected runtime exceeds this are reported as failed
  // without running.
  double max_hours = 4.0;
  bool verbose = false;
};

struct Result {
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct Criterion {
  std::string name;
  std::string summary;
  bool slow = false;
  std::function<Result(const Options&)> run;
};

const std::vector<Criterion>& criteria();

/// Runs one criterion, timing it and turning exceptions into failures.
Result run_criterion(const Criterion& c, const Options& opts);

/// RMS error of MLMCb (plain MC, branching M) against value iteration at
/// levels 1..max_level, with the matching theoretical bounds. Q0 is the lower
/// end of the value range and e0 the sup distance from it to Q*.
struct DecayStudy {
  std::vector<double> rms_error;
  std::vector<double> bound;
  double lambda_hat = 0.0;  // exp of the fitted slope of log E_n against n

  bool passed() const;
  std::string describe() const;
};
DecayStudy decay_study(const FiniteMdp& mdp, int M, int K, int reps, int max_level,
                       std::uint64_t seed, int workers);

/// Slope, intercept and R^2 of the least-squares line y = a + b x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mlmcq::verify
