#include "aegd/analysis.hpp"

#include <algorithm>
#include <array>
#include <cfloat>
#include <cmath>
#include <stdexcept>

#include "aegd/parallel.hpp"

namespace aegd {

IdentityAuditReport audit_energy_identity(const Trace& trace) {
  if (!is_energy_based(trace.kind))
    throw std::invalid_argument("energy identity audit requires an AEGD-family trace");
  if (trace.kind == OptimizerKind::aegdw && trace.config.weight_decay != 0.0)
    throw std::invalid_argument(
        "energy identity audit: decoupled weight decay breaks the displacement identity");
  if (trace.energies.size() < 2 || trace.displacements.size() + 1 != trace.energies.size() ||
      trace.step_etas.size() != trace.displacements.size())
    throw std::invalid_argument("energy identity audit requires a trace recorded with vectors");

  const bool global = trace.energies.front().size() == 1;
  IdentityAuditReport report;
  report.steps_checked = static_cast<long>(trace.displacements.size());

  for (std::size_t k = 0; k < trace.displacements.size(); ++k) {
    const auto& r = trace.energies[k];
    const auto& r_next = trace.energies[k + 1];
    const auto& dtheta = trace.displacements[k];
    const double inv_eta = 1.0 / trace.step_etas[k];

    auto consider = [&](double residual, double scale, int coord) {
      const double rel = std::abs(residual) / std::max(scale, DBL_MIN);
      if (rel > report.max_rel_residual) {
        report.max_rel_residual = rel;
        report.worst_iteration = static_cast<long>(k);
        report.worst_coordinate = coord;
      }
    };

    if (global) {
      double disp_sq = 0.0;
      for (double d : dtheta) disp_sq += d * d;
      const double dr = r_next[0] - r[0];
      const double residual = r_next[0] * r_next[0] - r[0] * r[0] + dr * dr + inv_eta * disp_sq;
      consider(residual, r[0] * r[0], -1);
    } else {
      for (std::size_t i = 0; i < r.size(); ++i) {
        const double dr = r_next[i] - r[i];
        const double residual =
            r_next[i] * r_next[i] - r[i] * r[i] + dr * dr + inv_eta * dtheta[i] * dtheta[i];
        consider(residual, r[i] * r[i], static_cast<int>(i));
      }
    }
  }
  return report;
}

double compute_lg(const SmoothnessProfile& profile, double c) {
  const double shifted = profile.optimal_value + c;
  if (!(shifted > 0.0)) throw EnergyShiftError("energy-shift violation: f* + c <= 0");
  const double g_star = std::sqrt(shifted);
  return (profile.smoothness + profile.grad_sup_norm * profile.grad_sup_norm /
                                   (2.0 * g_star * g_star)) /
         (2.0 * g_star);
}

namespace {

double g_at(const Objective& objective, double c, std::span<const double> theta) {
  const double shifted = objective.value(theta) + c;
  if (!(shifted > 0.0)) throw EnergyShiftError("energy-shift violation: f + c <= 0");
  return std::sqrt(shifted);
}

const SmoothnessProfile& require_profile(const Objective& objective) {
  if (!objective.profile()) throw std::invalid_argument("objective carries no smoothness profile");
  return *objective.profile();
}

}  // namespace

double compute_tau_global(const Objective& objective, double c, std::span<const double> theta0) {
  const auto& profile = require_profile(objective);
  const double lg = compute_lg(profile, c);
  const double g_star = std::sqrt(profile.optimal_value + c);
  const double g0 = g_at(objective, c, theta0);
  return 2.0 * g_star / (lg * g0 * g0);
}

double compute_tau_elementwise(const Objective& objective, double c,
                               std::span<const double> theta0) {
  return compute_tau_global(objective, c, theta0) / static_cast<double>(objective.dim());
}

double compute_tau_late_stage(const Objective& objective, double c, double r_k0, double g_k0) {
  const auto& profile = require_profile(objective);
  const double lg = compute_lg(profile, c);
  const double g_star = std::sqrt(profile.optimal_value + c);
  return 2.0 * (g_star + r_k0 - g_k0) / (lg * r_k0 * r_k0);
}

FloorCheckResult verify_energy_floor(const Trace& trace, const Objective& objective, double c) {
  if (!is_energy_based(trace.kind))
    throw std::invalid_argument("energy floor check requires an AEGD-family trace");
  constexpr std::size_t kWindow = 100;
  if (trace.records.size() < kWindow + 1) throw std::runtime_error("not converged: trace too short");
  const auto& last = trace.records.back();
  const auto& earlier = trace.records[trace.records.size() - 1 - kWindow];
  if (std::abs(last.r_min - earlier.r_min) >= 1e-10 ||
      std::abs(last.r_max - earlier.r_max) >= 1e-10)
    throw std::runtime_error("not converged: energy still moving");

  const bool elementwise = trace.config.mode == EnergyMode::element_wise &&
                           trace.kind != OptimizerKind::aegd_global;
  FloorCheckResult result;
  result.tau = elementwise ? compute_tau_elementwise(objective, c, trace.initial_params)
                           : compute_tau_global(objective, c, trace.initial_params);
  const double g_star = std::sqrt(require_profile(objective).optimal_value + c);
  result.lower_bound = g_star * (1.0 - trace.config.base_step / result.tau);
  result.terminal_r = trace.final_energy.min_value();
  result.passed = result.terminal_r > result.lower_bound;
  return result;
}

namespace {

/// Terminal-energy classification behind the threshold search: after a
/// fixed budget, min_i r_i above 1e-6 r_0 counts as r* > 0.
bool terminal_energy_positive(const Objective& objective, std::span<const double> theta0,
                              double c, double eta, long budget) {
  OptimizerConfig config;
  config.base_step = eta;
  config.energy_shift = c;
  config.mode = EnergyMode::element_wise;
  RunOptions options;
  options.stop.max_iterations = budget;
  options.record_every = 0;
  const Trace trace = run(objective, OptimizerKind::aegd_elementwise, theta0, config, options);
  const double r0 = std::sqrt(objective.value(theta0) + c);
  return trace.final_energy.min_value() > 1e-6 * r0;
}

}  // namespace

ThresholdReport find_eta_threshold(const Objective& objective, std::span<const double> theta0,
                                   double c, double search_lo, double search_hi, long budget,
                                   int workers) {
  if (!(search_lo > 0.0) || !(search_hi > search_lo))
    throw std::invalid_argument("threshold search needs 0 < lo < hi");

  ThresholdReport report;
  report.budget = budget;
  if (objective.profile() && objective.profile()->smoothness > 0.0) {
    report.tau = compute_tau_global(objective, c, theta0);
    report.tau_tilde = compute_tau_elementwise(objective, c, theta0);
  }

  const bool lo_positive = terminal_energy_positive(objective, theta0, c, search_lo, budget);
  const bool hi_positive = terminal_energy_positive(objective, theta0, c, search_hi, budget);
  if (lo_positive == hi_positive)
    throw std::runtime_error("bracket invalid: both interval ends classify identically");

  double lo = search_lo;
  double hi = search_hi;
  // fixed fan-out so the bracket sequence does not depend on the worker
  // count; workers only parallelize the candidate evaluations
  constexpr int points = 6;
  while (hi - lo > 0.005 * (hi + lo)) {  // bracket width <= 1% of the midpoint
    std::array<double, points> etas;
    for (int i = 0; i < points; ++i)
      etas[static_cast<std::size_t>(i)] =
          lo + (hi - lo) * static_cast<double>(i + 1) / static_cast<double>(points + 1);
    std::array<char, points> positive{};
    for_each_index(points, workers, [&](int i) {
      positive[static_cast<std::size_t>(i)] = terminal_energy_positive(
          objective, theta0, c, etas[static_cast<std::size_t>(i)], budget) ? 1 : 0;
    });
    double new_lo = lo;
    double new_hi = hi;
    for (int i = 0; i < points; ++i) {
      if (positive[static_cast<std::size_t>(i)])
        new_lo = std::max(new_lo, etas[static_cast<std::size_t>(i)]);
      else
        new_hi = std::min(new_hi, etas[static_cast<std::size_t>(i)]);
    }
    lo = new_lo;
    hi = new_hi;
  }
  report.eta_low = lo;
  report.eta_high = hi;
  return report;
}

RateFit fit_convergence_rate(const Trace& trace, RateKind kind, double f_star) {
  // pre-floor segment: stop at the first record within 1e-14 of f*
  std::vector<std::pair<double, double>> xy;  // (k or log k, log(f - f*))
  for (const auto& rec : trace.records) {
    const double gap = rec.f_value - f_star;
    if (gap < 1e-14) break;
    if (kind == RateKind::sublinear && rec.iteration < 1) continue;
    const double x = kind == RateKind::linear ? static_cast<double>(rec.iteration)
                                              : std::log(static_cast<double>(rec.iteration));
    xy.emplace_back(x, std::log(gap));
  }
  const std::size_t m = xy.size();
  const std::size_t begin = m / 2;  // tail half skips transients
  if (m < 20 || m - begin < 10) throw std::runtime_error("insufficient decay for a rate fit");

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  const double count = static_cast<double>(m - begin);
  for (std::size_t i = begin; i < m; ++i) {
    sx += xy[i].first;
    sy += xy[i].second;
    sxx += xy[i].first * xy[i].first;
    sxy += xy[i].first * xy[i].second;
    syy += xy[i].second * xy[i].second;
  }
  const double cov = sxy - sx * sy / count;
  const double var_x = sxx - sx * sx / count;
  const double var_y = syy - sy * sy / count;

  RateFit fit;
  fit.slope = cov / var_x;
  fit.intercept = (sy - fit.slope * sx) / count;
  fit.r_squared = var_y > 0.0 ? (cov * cov) / (var_x * var_y) : 1.0;
  fit.fit_begin = static_cast<long>(begin);
  fit.fit_end = static_cast<long>(m);
  return fit;
}

RateBound theorem_rate_bound(const Trace& trace, const Objective& objective, double c,
                             bool strongly_convex) {
  const auto& profile = require_profile(objective);
  if (!(profile.smoothness > 0.0)) throw std::invalid_argument("rate bound needs L in the profile");

  RateBound bound;
  bound.required_bound = strongly_convex
                             ? 2.0 / (profile.strong_convexity + profile.smoothness)
                             : 1.0 / profile.smoothness;

  // smallest k0 with max_{j >= k0} eta_eff <= required (terminal record
  // carries no step and is skipped)
  const long steps = static_cast<long>(trace.records.size()) - 1;
  if (steps < 1) throw std::invalid_argument("rate bound needs a non-empty trace");
  long idx = -1;
  double suffix_max = 0.0;
  std::vector<double> suffix(static_cast<std::size_t>(steps));
  for (long j = steps - 1; j >= 0; --j) {
    suffix_max = std::max(suffix_max, trace.records[static_cast<std::size_t>(j)].eta_eff_max);
    suffix[static_cast<std::size_t>(j)] = suffix_max;
  }
  for (long j = 0; j < steps; ++j) {
    if (suffix[static_cast<std::size_t>(j)] <= bound.required_bound) {
      idx = j;
      break;
    }
  }
  bound.hypothesis_met = idx >= 0;
  if (!bound.hypothesis_met) return bound;

  const auto& at_k0 = trace.records[static_cast<std::size_t>(idx)];
  bound.k0 = at_k0.iteration;
  bound.max_eta_eff = suffix[static_cast<std::size_t>(idx)];

  const double modulus = strongly_convex ? profile.strong_convexity : profile.pl_constant;
  if (!(modulus > 0.0))
    throw std::invalid_argument("rate bound needs mu (PL) or alpha (strongly convex)");
  bound.rate_constant = modulus * at_k0.eta_base / std::sqrt(at_k0.f_value + c);

  const double r_terminal = trace.final_energy.min_value();
  bound.bound_slope_f = -(strongly_convex ? 2.0 : 1.0) * bound.rate_constant * r_terminal;
  return bound;
}

EffectiveStepShape effective_step_shape(const Trace& trace, double tol, long transient) {
  const long steps = static_cast<long>(trace.records.size()) - 1;
  if (steps < 3) throw std::invalid_argument("effective step shape needs at least 3 steps");

  EffectiveStepShape shape;
  for (long j = 0; j < steps; ++j) {
    const double v = trace.records[static_cast<std::size_t>(j)].eta_eff_max;
    if (v > shape.peak_value) {
      shape.peak_value = v;
      shape.peak_index = j;
    }
  }
  // The raw trace oscillates locally (valley-following), so the decay is
  // judged on window maxima past the peak.
  const long tail = steps - shape.peak_index - transient;
  shape.decays_after_peak = true;
  if (tail <= 0) return shape;
  const long window = std::max<long>(10, tail / 100);
  double prev_max = -1.0;
  for (long start = shape.peak_index + transient; start + window <= steps; start += window) {
    double w_max = 0.0;
    for (long j = start; j < start + window; ++j)
      w_max = std::max(w_max, trace.records[static_cast<std::size_t>(j)].eta_eff_max);
    if (prev_max >= 0.0 && w_max > prev_max * (1.0 + tol)) {
      shape.decays_after_peak = false;
      break;
    }
    prev_max = w_max;
  }
  return shape;
}

StochasticStabilityReport check_stochastic_stability(const FiniteSumObjective& objective,
                                                     const OptimizerConfig& config,
                                                     std::span<const double> theta0, int trials,
                                                     long steps, std::uint64_t seed,
                                                     int workers) {
  const int n = objective.dim();
  StochasticStabilityReport report;
  const long stride = std::max<long>(1, steps / 10);
  for (long k = 0; k <= steps; k += stride) report.checkpoints.push_back(k);
  if (report.checkpoints.back() != steps) report.checkpoints.push_back(steps);
  const std::size_t n_cp = report.checkpoints.size();

  // per-trial summaries, filled independently per slot
  std::vector<double> r_at(static_cast<std::size_t>(trials) * n_cp * static_cast<std::size_t>(n));
  std::vector<double> disp(static_cast<std::size_t>(trials) * static_cast<std::size_t>(n));

  const Rng master(seed);
  const std::vector<double> start(theta0.begin(), theta0.end());
  for_each_index(trials, workers, [&](int t) {
    RunOptions options;
    options.stop.max_iterations = steps;
    options.seed = master.stream_seed(static_cast<std::uint64_t>(t));
    options.sampling = SamplingScheme{SamplingKind::iid_component, 1};
    options.record_vectors = true;
    options.record_every = 0;
    const Trace trace = run(objective, OptimizerKind::saegd, start, config, options);

    double* r_slot = r_at.data() + static_cast<std::size_t>(t) * n_cp * static_cast<std::size_t>(n);
    for (std::size_t cp = 0; cp < n_cp; ++cp) {
      const auto& r = trace.energies[static_cast<std::size_t>(report.checkpoints[cp])];
      for (int i = 0; i < n; ++i) r_slot[cp * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = r[static_cast<std::size_t>(i)];
    }
    double* d_slot = disp.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(n);
    for (const auto& dtheta : trace.displacements)
      for (int i = 0; i < n; ++i) d_slot[i] += dtheta[static_cast<std::size_t>(i)] * dtheta[static_cast<std::size_t>(i)];
  });

  auto mean_se = [&](auto value_of_trial) {
    double sum = 0.0, sum_sq = 0.0;
    for (int t = 0; t < trials; ++t) {
      const double v = value_of_trial(t);
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / trials;
    const double var = std::max(0.0, sum_sq / trials - mean * mean);
    return std::pair<double, double>{mean, std::sqrt(var / trials)};
  };

  report.mean_r.assign(n_cp, std::vector<double>(static_cast<std::size_t>(n)));
  report.stderr_r.assign(n_cp, std::vector<double>(static_cast<std::size_t>(n)));
  for (std::size_t cp = 0; cp < n_cp; ++cp) {
    for (int i = 0; i < n; ++i) {
      auto [mean, se] = mean_se([&](int t) {
        return r_at[static_cast<std::size_t>(t) * n_cp * static_cast<std::size_t>(n) +
                    cp * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)];
      });
      report.mean_r[cp][static_cast<std::size_t>(i)] = mean;
      report.stderr_r[cp][static_cast<std::size_t>(i)] = se;
    }
  }

  report.monotone_within_bands = true;
  for (std::size_t cp = 0; cp + 1 < n_cp; ++cp) {
    for (int i = 0; i < n; ++i) {
      const double a = report.mean_r[cp][static_cast<std::size_t>(i)];
      const double b = report.mean_r[cp + 1][static_cast<std::size_t>(i)];
      const double band = 3.0 * std::sqrt(report.stderr_r[cp][static_cast<std::size_t>(i)] *
                                              report.stderr_r[cp][static_cast<std::size_t>(i)] +
                                          report.stderr_r[cp + 1][static_cast<std::size_t>(i)] *
                                              report.stderr_r[cp + 1][static_cast<std::size_t>(i)]);
      if (b > a + band) report.monotone_within_bands = false;
    }
  }

  report.cumulative_disp.resize(static_cast<std::size_t>(n));
  report.cumulative_disp_stderr.resize(static_cast<std::size_t>(n));
  bool disp_ok = true;
  report.disp_bound = config.base_step * (objective.value(theta0) + config.energy_shift);
  for (int i = 0; i < n; ++i) {
    auto [mean, se] = mean_se([&](int t) {
      return disp[static_cast<std::size_t>(t) * static_cast<std::size_t>(n) +
                  static_cast<std::size_t>(i)];
    });
    report.cumulative_disp[static_cast<std::size_t>(i)] = mean;
    report.cumulative_disp_stderr[static_cast<std::size_t>(i)] = se;
    if (mean > report.disp_bound + 3.0 * se) disp_ok = false;
  }
  report.disp_bound_ok = disp_ok;
  return report;
}

DirectionEstimateReport check_direction_estimate(const FiniteSumObjective& objective,
                                                 const OptimizerConfig& config,
                                                 std::span<const double> theta0, double a,
                                                 double g_inf, int trials, long k,
                                                 std::uint64_t seed, int workers) {
  const int n = objective.dim();
  const double eta = config.base_step;
  const double c = config.energy_shift;

  // per-trial accumulators: sum of v^2 over steps 0..k, r at step k, r0
  std::vector<double> v_sq(static_cast<std::size_t>(trials) * static_cast<std::size_t>(n));
  std::vector<double> r_k(static_cast<std::size_t>(trials) * static_cast<std::size_t>(n));
  std::vector<double> r_0(static_cast<std::size_t>(trials) * static_cast<std::size_t>(n));
  std::vector<char> region_violated(static_cast<std::size_t>(trials), 0);

  const Rng master(seed);
  const std::vector<double> start(theta0.begin(), theta0.end());
  for_each_index(trials, workers, [&](int t) {
    Sampler sampler(SamplingScheme{SamplingKind::iid_component, 1}, objective.count(),
                    Rng(master.stream_seed(static_cast<std::uint64_t>(t))));
    std::vector<double> theta = start;
    std::vector<double> r;
    double* vs = v_sq.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(n);
    for (long j = 0; j <= k; ++j) {
      const SampledBatch batch = sampler.next();
      auto [f_sampled, grad] = sampled_value_and_grad(objective, batch, theta);
      if (!(f_sampled + c >= a)) region_violated[static_cast<std::size_t>(t)] = 1;
      for (double g : grad)
        if (std::abs(g) > g_inf) region_violated[static_cast<std::size_t>(t)] = 1;

      const double g_sqrt = std::sqrt(f_sampled + c);
      if (r.empty()) {
        r.assign(static_cast<std::size_t>(n), g_sqrt);
        std::copy(r.begin(), r.end(),
                  r_0.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(n));
      }
      if (j == k)
        std::copy(r.begin(), r.end(),
                  r_k.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(n));

      for (int i = 0; i < n; ++i) {
        const double v = grad[static_cast<std::size_t>(i)] / (2.0 * g_sqrt);
        vs[i] += v * v;
        if (j < k) {  // advance the state only up to theta_k
          const double r_next = r[static_cast<std::size_t>(i)] / (1.0 + 2.0 * eta * v * v);
          theta[static_cast<std::size_t>(i)] -= 2.0 * eta * r_next * v;
          r[static_cast<std::size_t>(i)] = r_next;
        }
      }
    }
  });

  for (char violated : region_violated)
    if (violated) throw std::runtime_error("region violation: claimed a / G bounds broken");

  auto mean_se = [&](const std::vector<double>& store, int i) {
    double sum = 0.0, sum_sq = 0.0;
    for (int t = 0; t < trials; ++t) {
      const double v =
          store[static_cast<std::size_t>(t) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)];
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / trials;
    const double var = std::max(0.0, sum_sq / trials - mean * mean);
    return std::pair<double, double>{mean, std::sqrt(var / trials)};
  };

  DirectionEstimateReport report;
  report.k = k;
  report.lhs.resize(static_cast<std::size_t>(n));
  report.lhs_stderr.resize(static_cast<std::size_t>(n));
  report.rhs.resize(static_cast<std::size_t>(n));
  report.c_constant.resize(static_cast<std::size_t>(n));
  report.holds = true;
  const double dk = static_cast<double>(k);
  for (int i = 0; i < n; ++i) {
    auto [v_mean, v_se] = mean_se(v_sq, i);
    auto [rk_mean, rk_se] = mean_se(r_k, i);
    auto [r0_mean, r0_se] = mean_se(r_0, i);
    report.lhs[static_cast<std::size_t>(i)] = v_mean / dk;
    report.lhs_stderr[static_cast<std::size_t>(i)] = v_se / dk;
    const double c_i = r0_mean * (2.0 * a + eta * g_inf * g_inf) / (4.0 * a * eta);
    report.c_constant[static_cast<std::size_t>(i)] = c_i;
    const double rhs = c_i / (dk * rk_mean);
    report.rhs[static_cast<std::size_t>(i)] = rhs;
    const double rhs_se = rhs * rk_se / rk_mean;  // first-order error from E[r_k]
    const double band =
        3.0 * std::sqrt(report.lhs_stderr[static_cast<std::size_t>(i)] *
                            report.lhs_stderr[static_cast<std::size_t>(i)] +
                        rhs_se * rhs_se);
    if (report.lhs[static_cast<std::size_t>(i)] > rhs + band) report.holds = false;
  }
  return report;
}

}  // namespace aegd
