#include "aegd/verify.hpp"

#include <cfloat>
#include <cmath>
#include <cstdio>
#include <vector>

#include "aegd/analysis.hpp"
#include "aegd/objective.hpp"
#include "aegd/optimizer.hpp"

namespace aegd {

namespace {

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

/// Random member of a smooth test family: shifted diagonal quadratic plus
/// a quartic term, f(x) = sum a_i (x_i - b_i)^2 + q sum (x_i - b_i)^4 + d.
/// Bounded below by d >= 0, so any c > 0 is a valid energy shift.
Objective random_objective(Rng& rng, int dim, std::vector<double>* shift_out = nullptr) {
  std::vector<double> a(static_cast<std::size_t>(dim));
  std::vector<double> b(static_cast<std::size_t>(dim));
  for (auto& v : a) v = rng.uniform(0.5, 3.0);
  for (auto& v : b) v = rng.uniform(-1.0, 1.0);
  const double q = rng.uniform(0.0, 0.5);
  const double d = rng.uniform(0.0, 2.0);
  if (shift_out != nullptr) *shift_out = b;
  auto value = [a, b, q, d](std::span<const double> x) {
    double f = d;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double u = x[i] - b[i];
      f += a[i] * u * u + q * u * u * u * u;
    }
    return f;
  };
  auto grad = [a, b, q](std::span<const double> x, std::span<double> g) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double u = x[i] - b[i];
      g[i] = 2.0 * a[i] * u + 4.0 * q * u * u * u;
    }
  };
  return Objective("random", dim, value, grad);
}

std::vector<double> random_start_away_from(const std::vector<double>& b, Rng& rng) {
  std::vector<double> theta(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double sign = rng.next_double() < 0.5 ? -1.0 : 1.0;
    theta[i] = b[i] + sign * rng.uniform(0.3, 1.5);
  }
  return theta;
}

/// Monotonicity audit from the recorded vectors: r never increases, and
/// strictly decreases whenever the implied v-component is large enough to
/// be representable in the update (2 eta v^2 >= 4 eps).
bool energy_monotone(const Trace& trace, std::string* why) {
  for (std::size_t k = 0; k < trace.displacements.size(); ++k) {
    const auto& r = trace.energies[k];
    const auto& r_next = trace.energies[k + 1];
    const double eta = trace.step_etas[k];
    const bool global = r.size() == 1;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r_next[i] > r[i]) {
        *why = fmt("r increased at step %g coordinate %g", static_cast<double>(k),
                   static_cast<double>(i));
        return false;
      }
      double disp_sq = 0.0;
      if (global) {
        for (double dd : trace.displacements[k]) disp_sq += dd * dd;
      } else {
        disp_sq = trace.displacements[k][i] * trace.displacements[k][i];
      }
      if (disp_sq > 0.0 && r_next[i] > 0.0) {
        // v recovered from dtheta = -2 eta r' v
        const double v_sq = disp_sq / (4.0 * eta * eta * r_next[i] * r_next[i]);
        if (2.0 * eta * v_sq >= 4.0 * DBL_EPSILON && !(r_next[i] < r[i])) {
          *why = fmt("r failed to strictly decrease at step %g coordinate %g",
                     static_cast<double>(k), static_cast<double>(i));
          return false;
        }
      }
    }
  }
  return true;
}

}  // namespace

SuiteResult verify_identity_suite(std::uint64_t seed) {
  SuiteResult suite{"identity", {}};
  Rng master(seed);

  double worst_residual = 0.0;
  bool monotone_ok = true;
  std::string why;

  for (int t = 0; t < 100; ++t) {
    Rng rng = master.stream(static_cast<std::uint64_t>(t));
    const int dim = 1 + static_cast<int>(rng.next_below(8));
    const double eta = rng.log_uniform(1e-4, 1e3);

    OptimizerConfig config;
    config.base_step = eta;
    config.energy_shift = 1.0;
    RunOptions options;
    options.stop.max_iterations = 60;
    options.record_vectors = true;

    Trace trace;
    switch (t % 3) {
      case 0: {
        config.mode = EnergyMode::global;
        std::vector<double> shift;
        const Objective objective = random_objective(rng, dim, &shift);
        const auto theta0 = random_start_away_from(shift, rng);
        trace = run(objective, OptimizerKind::aegd_global, theta0, config, options);
        break;
      }
      case 1: {
        std::vector<double> shift;
        const Objective objective = random_objective(rng, dim, &shift);
        const auto theta0 = random_start_away_from(shift, rng);
        trace = run(objective, OptimizerKind::aegd_elementwise, theta0, config, options);
        break;
      }
      default: {
        FiniteSumObjective fs({random_objective(rng, dim), random_objective(rng, dim)});
        std::vector<double> theta0(static_cast<std::size_t>(dim));
        for (auto& v : theta0) v = rng.uniform(-2.0, 2.0);
        options.seed = rng.next_u64();
        trace = run(fs, OptimizerKind::saegd, theta0, config, options);
        break;
      }
    }

    const auto audit = audit_energy_identity(trace);
    worst_residual = std::max(worst_residual, audit.max_rel_residual);
    if (monotone_ok && !energy_monotone(trace, &why)) monotone_ok = false;
  }

  suite.lines.push_back({"random-triples residual < 1e-12", worst_residual < 1e-12,
                         fmt("max relative residual %.3g over 100 triples", worst_residual)});
  suite.lines.push_back({"energy monotonicity", monotone_ok, monotone_ok ? "r non-increasing, strict on active coordinates" : why});

  // named objectives across the eta range
  double named_worst = 0.0;
  for (double eta : {1e-4, 1.0, 100.0}) {
    for (int which = 0; which < 3; ++which) {
      const Objective objective =
          which == 0 ? rosenbrock2d() : (which == 1 ? quadratic100() : pl_example1d());
      std::vector<double> theta0;
      if (which == 0) theta0 = {-3.0, -4.0};
      else if (which == 1) theta0.assign(100, 1.0);
      else theta0 = {3.0};
      OptimizerConfig config;
      config.base_step = eta;
      RunOptions options;
      options.stop.max_iterations = 1000;
      options.record_vectors = true;
      const Trace trace = run(objective, OptimizerKind::aegd_elementwise, theta0, config, options);
      named_worst = std::max(named_worst, audit_energy_identity(trace).max_rel_residual);
    }
  }
  suite.lines.push_back({"benchmark objectives residual < 1e-12", named_worst < 1e-12,
                         fmt("max relative residual %.3g at eta in {1e-4, 1, 100}", named_worst)});

  // a flat objective takes no steps: the identity is exact zero
  const Objective flat("flat", 2, [](std::span<const double>) { return 1.0; },
                       [](std::span<const double>, std::span<double> g) { g[0] = g[1] = 0.0; });
  OptimizerConfig config;
  RunOptions options;
  options.stop.max_iterations = 10;
  options.record_vectors = true;
  const Trace trace = run(flat, OptimizerKind::aegd_elementwise, std::vector<double>{1.0, -2.0},
                          config, options);
  const auto flat_audit = audit_energy_identity(trace);
  suite.lines.push_back({"zero-gradient residual exactly 0", flat_audit.max_rel_residual == 0.0,
                         fmt("residual %.3g", flat_audit.max_rel_residual)});
  return suite;
}

SuiteResult verify_thresholds_suite() {
  SuiteResult suite{"thresholds", {}};
  const Objective toy = toy_quadratic1d();
  const std::vector<double> theta0{1.0};
  const double c = 1.0;

  const double tau = compute_tau_global(toy, c, theta0);
  suite.lines.push_back(
      {"tau(x^2, c=1, theta0=1) = 0.5", std::abs(tau - 0.5) < 1e-12, fmt("tau = %.12f", tau)});
  const double tau_tilde = compute_tau_elementwise(toy, c, theta0);
  suite.lines.push_back({"tau~ = tau in 1-D", tau_tilde == tau, fmt("tau~ = %.12f", tau_tilde)});
  const double g0 = std::sqrt(toy.value(theta0) + c);
  const double tau1 = compute_tau_late_stage(toy, c, g0, g0);
  suite.lines.push_back({"tau1 at k0 = 0 equals tau", std::abs(tau1 - tau) < 1e-12,
                         fmt("tau1 = %.12f", tau1)});

  for (double eta : {0.05, 0.1, 0.25, 0.001}) {
    OptimizerConfig config;
    config.base_step = eta;
    config.energy_shift = c;
    RunOptions options;
    options.stop.max_iterations = 50000;
    options.record_every = 10;
    const Trace trace = run(toy, OptimizerKind::aegd_elementwise, theta0, config, options);
    const auto floor = verify_energy_floor(trace, toy, c);
    suite.lines.push_back(
        {fmt("energy floor at eta = %g", eta), floor.passed,
         fmt("terminal r = %.6f > bound %.6f", floor.terminal_r, floor.lower_bound)});
  }
  return suite;
}

SuiteResult verify_rates_suite() {
  SuiteResult suite{"rates", {}};

  {  // strongly convex case
    const Objective objective = quadratic100();
    OptimizerConfig config;
    config.base_step = 0.1;
    RunOptions options;
    options.stop.max_iterations = 30000;
    const Trace trace = run(objective, OptimizerKind::aegd_elementwise,
                            std::vector<double>(100, 1.0), config, options);
    const RateFit fit = fit_convergence_rate(trace, RateKind::linear, 0.0);
    const RateBound bound = theorem_rate_bound(trace, objective, 1.0, true);
    suite.lines.push_back({"quad100 linear fit R^2 > 0.99", fit.r_squared > 0.99,
                           fmt("R^2 = %.6f, slope %.5f per iteration", fit.r_squared, fit.slope)});
    suite.lines.push_back({"quad100 step-size hypothesis holds", bound.hypothesis_met,
                           fmt("max eta_eff %.4f <= %.4f from k0 = %g", bound.max_eta_eff,
                               bound.required_bound, static_cast<double>(bound.k0))});
    suite.lines.push_back({"quad100 fitted rate beats theorem bound",
                           bound.hypothesis_met && fit.slope <= bound.bound_slope_f,
                           fmt("fit %.5f <= bound %.5f", fit.slope, bound.bound_slope_f)});
  }

  {  // PL case
    const Objective objective = pl_example1d();
    OptimizerConfig config;
    config.base_step = 0.1;
    RunOptions options;
    options.stop.max_iterations = 2000;
    const Trace trace =
        run(objective, OptimizerKind::aegd_elementwise, std::vector<double>{3.0}, config, options);
    const RateFit fit = fit_convergence_rate(trace, RateKind::linear, 0.0);
    const RateBound bound = theorem_rate_bound(trace, objective, 1.0, false);
    suite.lines.push_back({"pl1d linear fit R^2 > 0.99", fit.r_squared > 0.99,
                           fmt("R^2 = %.6f, slope %.4f per iteration", fit.r_squared, fit.slope)});
    suite.lines.push_back({"pl1d step-size hypothesis holds", bound.hypothesis_met,
                           fmt("max eta_eff %.4f <= %.4f from k0 = %g", bound.max_eta_eff,
                               bound.required_bound, static_cast<double>(bound.k0))});
    suite.lines.push_back({"pl1d fitted rate beats theorem bound",
                           bound.hypothesis_met && fit.slope <= bound.bound_slope_f,
                           fmt("fit %.4f <= bound %.6f", fit.slope, bound.bound_slope_f)});
  }

  {  // closed-form GD contraction on the diagonal quadratic
    const Objective objective = quadratic100();
    OptimizerConfig config;
    config.base_step = 0.9;
    RunOptions options;
    options.stop.max_iterations = 2000;
    const Trace trace =
        run(objective, OptimizerKind::gd, std::vector<double>(100, 1.0), config, options);
    const RateFit fit = fit_convergence_rate(trace, RateKind::linear, 0.0);
    const double expected = 2.0 * std::log(1.0 - 0.9 * 0.02);  // slowest mode, in f
    const bool ok = std::abs(fit.slope / expected - 1.0) < 1e-3;
    suite.lines.push_back({"GD closed-form contraction reproduced", ok,
                           fmt("fit %.6f vs closed form %.6f", fit.slope, expected)});
  }
  return suite;
}

SuiteResult verify_stochastic_suite(int trials, std::uint64_t seed, int workers) {
  SuiteResult suite{"stochastic", {}};
  const FiniteSumObjective fs = two_component_sum1d();
  OptimizerConfig config;
  config.base_step = 0.1;
  config.energy_shift = 1.0;
  const std::vector<double> theta0{1.0};

  const auto stability =
      check_stochastic_stability(fs, config, theta0, trials, 1000, seed, workers);
  suite.lines.push_back({"E[r] monotone non-increasing", stability.monotone_within_bands,
                         fmt("checked %g checkpoints within 3 SE",
                             static_cast<double>(stability.checkpoints.size()))});
  suite.lines.push_back(
      {"cumulative E[dtheta^2] within bound", stability.disp_bound_ok,
       fmt("sum %.4f <= eta (f0 + c) = %.4f", stability.cumulative_disp[0], stability.disp_bound)});

  for (long k : {10L, 100L}) {
    const auto estimate =
        check_direction_estimate(fs, config, theta0, 1.0, 8.0, trials, k, seed + 1, workers);
    suite.lines.push_back({fmt("direction-wise estimate at k = %g", static_cast<double>(k)),
                           estimate.holds,
                           fmt("lhs %.4f <= rhs %.4f", estimate.lhs[0], estimate.rhs[0])});
  }
  return suite;
}

}  // namespace aegd
