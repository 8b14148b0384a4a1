#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aegd/objective.hpp"
#include "aegd/optimizer.hpp"

namespace aegd {

/// Worst residual of the per-step energy identity
///   r_{k+1}^2 = r_k^2 - (r_{k+1} - r_k)^2 - eta^{-1} (theta_{k+1} - theta_k)^2
/// over every step and coordinate of a trace. The identity is exact
/// algebra of the update rule, so residuals beyond rounding noise mean a
/// broken implementation.
struct IdentityAuditReport {
  double max_rel_residual = 0.0;
  long worst_iteration = -1;
  int worst_coordinate = -1;
  long steps_checked = 0;
};

/// Requires an energy-based trace recorded with vectors
/// (RunOptions::record_vectors); rejects traces from other optimizers.
IdentityAuditReport audit_energy_identity(const Trace& trace);

/// Smoothness constant of g = sqrt(f + c):
///   L_g = (1 / (2 g*)) (L + G_inf^2 / (2 g*^2)),  g* = sqrt(f* + c).
double compute_lg(const SmoothnessProfile& profile, double c);

/// Sufficient step-size bound for a positive terminal energy,
///   tau = 2 g* / (L_g g(theta0)^2).
double compute_tau_global(const Objective& objective, double c, std::span<const double> theta0);

/// Element-wise variant: tau~ = tau / n.
double compute_tau_elementwise(const Objective& objective, double c,
                               std::span<const double> theta0);

/// Late-stage bound when restarting the argument at iteration k0 with
/// energy r_k0 at a point where g = g_k0:
///   tau_1 = 2 (g* + r_k0 - g_k0) / (L_g r_k0^2).
double compute_tau_late_stage(const Objective& objective, double c, double r_k0, double g_k0);

struct FloorCheckResult {
  bool passed = false;
  double terminal_r = 0.0;
  double lower_bound = 0.0;  // g* (1 - eta / tau)
  double tau = 0.0;
};

/// Checks the terminal energy of a stabilized run against the theoretical
/// floor r* > g* (1 - eta / tau) (tau~ in element-wise mode). Throws
/// "not converged" unless r moved less than 1e-10 over the last 100
/// recorded steps.
FloorCheckResult verify_energy_floor(const Trace& trace, const Objective& objective, double c);

struct ThresholdReport {
  double eta_low = 0.0;   // largest probed eta classified r* > 0
  double eta_high = 0.0;  // smallest probed eta classified r* ~ 0
  double tau = 0.0;       // theoretical sufficient bound, 0 if unavailable
  double tau_tilde = 0.0;
  long budget = 0;

  double eta_threshold() const { return 0.5 * (eta_low + eta_high); }
};

/// Locates the empirical step-size threshold separating runs whose
/// terminal energy stays positive from runs where it collapses to zero.
/// Classification: element-wise run for `budget` iterations; terminal
/// min_i r_i > 1e-6 r_0 counts as positive. The search interval must
/// bracket the transition; candidates within a round are evaluated
/// concurrently and the bracket shrinks until its width is <= 1% of the
/// midpoint.
ThresholdReport find_eta_threshold(const Objective& objective, std::span<const double> theta0,
                                   double c, double search_lo, double search_hi, long budget,
                                   int workers = 0);

enum class RateKind { linear, sublinear };

struct RateFit {
  double slope = 0.0;      // per-iteration slope of log(f - f*) (linear kind)
  double intercept = 0.0;  // or the log-log slope for the sublinear kind
  double r_squared = 0.0;
  long fit_begin = 0;  // record range used
  long fit_end = 0;
};

/// Least-squares fit of the convergence rate over the tail half of the
/// trace, restricted to records with f - f* above the 1e-14 numerical
/// floor. linear: log(f - f*) against k; sublinear: against log k.
RateFit fit_convergence_rate(const Trace& trace, RateKind kind, double f_star);

struct RateBound {
  bool hypothesis_met = false;  // max effective step below the required bound
  long k0 = 0;                  // first index from which the hypothesis holds
  double max_eta_eff = 0.0;     // realized max over [k0, end)
  double required_bound = 0.0;  // 1/L (PL) or 2/(alpha+L) (strongly convex)
  double rate_constant = 0.0;   // c0 or c2 from the theorem
  double bound_slope_f = 0.0;   // per-iteration bound on the slope of log(f - f*)
};

/// Evaluates the theorem's a-posteriori rate bound on a realized trace:
/// PL case uses c0 = mu eta / sqrt(f(theta_k0) + c) and the bound
/// exp(-c0 (k - k0) r_k) on f - f*; the strongly convex case uses
/// c2 = alpha eta / sqrt(f(theta_k0) + c) on the iterate distance, which
/// doubles in f. `strongly_convex` selects the case; the profile supplies
/// mu or alpha plus L.
RateBound theorem_rate_bound(const Trace& trace, const Objective& objective, double c,
                             bool strongly_convex);

/// Rise-then-decay shape of the effective step trace: its running maximum
/// is attained at some index J, and beyond J (plus a short transient) it
/// is non-increasing within `tol` relative slack.
struct EffectiveStepShape {
  long peak_index = 0;
  double peak_value = 0.0;
  bool decays_after_peak = false;
};

EffectiveStepShape effective_step_shape(const Trace& trace, double tol = 1e-9,
                                        long transient = 10);

struct StochasticStabilityReport {
  std::vector<long> checkpoints;
  // mean_r[t][i]: Monte Carlo estimate of E[r_{k,i}] at checkpoint t
  std::vector<std::vector<double>> mean_r;
  std::vector<std::vector<double>> stderr_r;
  bool monotone_within_bands = false;
  // cumulative per-coordinate E[(theta_{j+1,i} - theta_{j,i})^2] over the run
  std::vector<double> cumulative_disp;
  std::vector<double> cumulative_disp_stderr;
  double disp_bound = 0.0;  // eta (f(theta0) + c)
  bool disp_bound_ok = false;
};

/// Monte Carlo check of the stochastic energy stability statements:
/// E[r_{k,i}] non-increasing at every checkpoint (within 3 standard
/// errors) and the cumulative expected squared displacement bounded by
/// eta (f(theta0) + c).
StochasticStabilityReport check_stochastic_stability(const FiniteSumObjective& objective,
                                                     const OptimizerConfig& config,
                                                     std::span<const double> theta0, int trials,
                                                     long steps, std::uint64_t seed,
                                                     int workers = 0);

struct DirectionEstimateReport {
  long k = 0;
  std::vector<double> lhs;         // (1/k) sum_{j<=k} E[v_{j,i}^2]
  std::vector<double> lhs_stderr;
  std::vector<double> rhs;         // C_i / (k E[r_{k,i}])
  std::vector<double> c_constant;  // C_i = E[r_{0,i}] (2a + eta G^2) / (4 a eta)
  bool holds = false;              // lhs <= rhs + 3 SE in every coordinate
};

/// Monte Carlo check of the direction-wise second-moment estimate at
/// step k. `a` and `g_inf` are the claimed bounds f_l + c >= a and
/// |grad f_l|_inf <= G over the visited region; every visited sample is
/// verified against them post hoc and a violation throws
/// "region violation".
DirectionEstimateReport check_direction_estimate(const FiniteSumObjective& objective,
                                                 const OptimizerConfig& config,
                                                 std::span<const double> theta0, double a,
                                                 double g_inf, int trials, long k,
                                                 std::uint64_t seed, int workers = 0);

}  // namespace aegd
