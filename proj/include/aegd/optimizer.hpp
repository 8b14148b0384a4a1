#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "aegd/objective.hpp"
#include "aegd/rng.hpp"

namespace aegd {

/// Raised when f + c <= 0, so the energy sqrt(f + c) is undefined.
struct EnergyShiftError : std::domain_error {
  explicit EnergyShiftError(const std::string& what) : std::domain_error(what) {}
};

/// Raised on NaN/Inf gradient input to a step rule.
struct NonFiniteGradientError : std::invalid_argument {
  explicit NonFiniteGradientError(const std::string& what) : std::invalid_argument(what) {}
};

enum class OptimizerKind {
  aegd_global,       // scalar energy variable
  aegd_elementwise,  // per-coordinate energy variables
  saegd,             // stochastic, element-wise energy
  aegdw,             // stochastic with decoupled weight decay
  gd,
  gdm,  // heavy-ball momentum
  adam,
};

std::string to_string(OptimizerKind kind);
bool is_energy_based(OptimizerKind kind);
bool is_stochastic(OptimizerKind kind);

enum class EnergyMode { global, element_wise };

struct OptimizerConfig {
  double base_step = 0.1;    // eta; good default per the step-rule design
  double energy_shift = 1.0; // c, must keep f + c > 0
  EnergyMode mode = EnergyMode::element_wise;
  double momentum = 0.0;     // mu in [0,1), heavy-ball only
  double weight_decay = 0.0; // lambda >= 0, decoupled decay only
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
};

/// The auxiliary energy variable r. Holds one value in global mode and
/// one per coordinate in element-wise mode. r0 = sqrt(f(theta0) + c) > 0,
/// and every update divides by 1 + 2*eta*v^2 >= 1, so values are positive,
/// non-increasing, and strictly decreasing wherever v != 0.
struct EnergyState {
  std::vector<double> values;

  bool scalar() const { return values.size() == 1; }
  double min_value() const;
  double max_value() const;
};

/// Everything one step produces. `displacement` is the computed update
/// -2*eta*r_{k+1} v (not a difference of stored iterates), so the
/// energy identity can be audited at full precision.
struct StepOutcome {
  std::vector<double> new_params;
  EnergyState new_energy;
  std::vector<double> effective_steps;  // eta * r_{k+1} / g(theta_k), per value
  std::vector<double> displacement;     // theta_{k+1} - theta_k
  double displacement_sq = 0.0;         // squared norm of displacement
};

/// r0 = sqrt(f(theta0) + c), replicated per coordinate in element-wise
/// mode. Throws EnergyShiftError unless f(theta0) + c > 0.
EnergyState init_energy(const Objective& objective, std::span<const double> theta0,
                        const OptimizerConfig& config);

/// Global step: with g = sqrt(f + c) and grad g = grad f / (2g),
///   r_{k+1} = r_k / (1 + 2 eta |grad g|^2)
///   theta_{k+1} = theta_k - 2 eta r_{k+1} grad g.
StepOutcome aegd_step_global(std::span<const double> theta, const EnergyState& r,
                             std::span<const double> grad_f, double f_value,
                             const OptimizerConfig& config);

/// Element-wise step: each coordinate carries its own energy,
///   r_{k+1,i} = r_{k,i} / (1 + 2 eta (d_i g)^2)
///   theta_{k+1,i} = theta_{k,i} - 2 eta r_{k+1,i} d_i g.
StepOutcome aegd_step_elementwise(std::span<const double> theta, const EnergyState& r,
                                  std::span<const double> grad_f, double f_value,
                                  const OptimizerConfig& config);

/// Stochastic step on a sampled component: v = sampled_grad / (2 sqrt(sampled_f + c)),
/// then the element-wise update with v in place of grad g.
StepOutcome saegd_step(std::span<const double> theta, const EnergyState& r,
                       double sampled_f, std::span<const double> sampled_grad,
                       const OptimizerConfig& config);

/// saegd_step plus decoupled weight decay:
///   theta_{k+1} = theta_k - eta (2 r_{k+1} v + lambda theta_k).
StepOutcome aegdw_step(std::span<const double> theta, const EnergyState& r,
                       double sampled_f, std::span<const double> sampled_grad,
                       const OptimizerConfig& config);

std::vector<double> gd_step(std::span<const double> theta, std::span<const double> grad_f,
                            double eta);

/// Heavy ball: theta_{k+1} = theta_k - eta grad f + mu (theta_k - theta_prev).
std::vector<double> gdm_step(std::span<const double> theta, std::span<const double> theta_prev,
                             std::span<const double> grad_f, double eta, double mu);

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  long step_count = 0;
};

std::vector<double> adam_step(std::span<const double> theta, AdamState& state,
                              std::span<const double> grad_f, double eta, double beta1,
                              double beta2, double epsilon);

enum class RunStatus {
  in_progress,
  budget_exhausted,
  gradient_tolerance,
  target_reached,
  f_change_tolerance,
  diverged,
};

std::string to_string(RunStatus status);

/// Termination and schedule control for run().
struct StoppingRule {
  long max_iterations = 1000;
  double grad_norm_tol = 0.0;                          // 0 = off
  double target_f = -std::numeric_limits<double>::infinity();  // -inf = off
  double f_change_tol = 0.0;                           // 0 = off
  /// Multiply eta by `factor` when reaching iteration k0 (staged decay);
  /// multiple stages allowed, applied in order of k0.
  std::vector<std::pair<long, double>> eta_decay;
};

/// Per-iteration log record. Record k holds the state at iteration k plus
/// the departing step's effective step and displacement; the terminal
/// record has zero effective step and displacement.
struct TraceRecord {
  long iteration = 0;
  double f_value = 0.0;
  double grad_norm = 0.0;
  double r_min = 0.0;
  double r_max = 0.0;
  double eta_eff_min = 0.0;
  double eta_eff_max = 0.0;
  double displacement_sq = 0.0;
  double eta_base = 0.0;  // eta in effect for the departing step
  RunStatus status = RunStatus::in_progress;
};

struct Trace {
  OptimizerKind kind = OptimizerKind::aegd_elementwise;
  OptimizerConfig config;
  std::vector<TraceRecord> records;
  std::vector<double> initial_params;
  std::vector<double> final_params;
  EnergyState final_energy;
  RunStatus status = RunStatus::in_progress;
  long iterations = 0;

  // Per-step vectors, populated when RunOptions::record_vectors is set.
  // energies[k] is r_k (k = 0..K); displacements[k] is theta_{k+1}-theta_k
  // (k = 0..K-1) as computed by the step rule; step_etas[k] is the eta in
  // effect for step k.
  std::vector<std::vector<double>> energies;
  std::vector<std::vector<double>> displacements;
  std::vector<double> step_etas;

  double final_f() const { return records.empty() ? 0.0 : records.back().f_value; }
};

struct RunOptions {
  StoppingRule stop;
  std::uint64_t seed = 0;  // drives sampling in stochastic runs
  SamplingScheme sampling;
  bool record_vectors = false;
  /// 1 = record every iteration; 0 = initial and terminal records only.
  long record_every = 1;
};

/// Iterates the chosen step rule from theta0 until the stopping rule
/// fires. Deterministic given the seed. Divergence (|f| or |theta|_inf
/// beyond 1e300, or non-finite values) terminates with status `diverged`
/// rather than throwing.
Trace run(const Objective& objective, OptimizerKind kind, std::span<const double> theta0,
          const OptimizerConfig& config, const RunOptions& options);

/// Finite-sum variant; saegd/aegdw sample components per step, the
/// deterministic kinds run on the combined objective.
Trace run(const FiniteSumObjective& objective, OptimizerKind kind,
          std::span<const double> theta0, const OptimizerConfig& config,
          const RunOptions& options);

}  // namespace aegd
