#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace aegd {

struct CheckLine {
  std::string label;
  bool passed = false;
  std::string detail;
};

struct SuiteResult {
  std::string name;
  std::vector<CheckLine> lines;

  bool passed() const {
    for (const auto& line : lines)
      if (!line.passed) return false;
    return true;
  }
};

/// Energy-identity suite: 100 random (objective, theta0, eta) triples
/// with eta log-uniform in [1e-4, 1e3], cycling through the energy-based
/// step rules, plus the named benchmark objectives. Every step must
/// satisfy the per-coordinate energy identity to 1e-12 relative residual;
/// r must never increase, and must strictly decrease whenever the scaled
/// gradient is machine-representable.
SuiteResult verify_identity_suite(std::uint64_t seed = 20230901);

/// Threshold suite: hand-computable tau on the 1-D toy problem and the
/// terminal-energy floor at several step sizes.
SuiteResult verify_thresholds_suite();

/// Rate suite: linear-rate fits with the a-posteriori theorem bounds on
/// the strongly convex and PL benchmarks, plus the closed-form GD
/// contraction cross-check.
SuiteResult verify_rates_suite();

/// Stochastic suite: Monte Carlo energy stability (monotone E[r],
/// displacement-sum bound) and the direction-wise second-moment estimate.
SuiteResult verify_stochastic_suite(int trials = 1000, std::uint64_t seed = 7,
                                    int workers = 0);

}  // namespace aegd
