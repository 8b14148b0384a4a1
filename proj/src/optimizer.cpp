#include "aegd/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace aegd {

namespace {

constexpr double kOverflowGuard = 1e300;

void check_finite_gradient(std::span<const double> grad) {
  for (double g : grad) {
    if (!std::isfinite(g)) throw NonFiniteGradientError("non-finite gradient");
  }
}

double positive_shifted(double f_value, double c) {
  const double shifted = f_value + c;
  if (!(shifted > 0.0)) throw EnergyShiftError("energy-shift violation: f + c <= 0");
  return shifted;
}

/// Shared element-wise energy update. With v_i the scaled gradient
/// direction, updates every coordinate as
///   r'_i = r_i / (1 + 2 eta v_i^2),  dtheta_i = -2 eta r'_i v_i  (- eta lambda theta_i).
StepOutcome elementwise_core(std::span<const double> theta, const EnergyState& r,
                             double f_value, std::span<const double> grad, double c,
                             double eta, double lambda) {
  check_finite_gradient(grad);
  const double shifted = positive_shifted(f_value, c);
  const double g_sqrt = std::sqrt(shifted);
  const std::size_t n = theta.size();

  StepOutcome out;
  out.new_params.resize(n);
  out.new_energy.values.resize(n);
  out.effective_steps.resize(n);
  out.displacement.resize(n);

  double disp_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = grad[i] / (2.0 * g_sqrt);
    const double r_next = r.values[i] / (1.0 + 2.0 * eta * v * v);
    double d = -2.0 * eta * r_next * v;
    if (lambda != 0.0) d -= eta * lambda * theta[i];
    out.new_energy.values[i] = r_next;
    out.new_params[i] = theta[i] + d;
    out.effective_steps[i] = eta * r_next / g_sqrt;
    out.displacement[i] = d;
    disp_sq += d * d;
  }
  out.displacement_sq = disp_sq;
  return out;
}

double inf_norm(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

double two_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

bool all_finite(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::aegd_global: return "aegd-global";
    case OptimizerKind::aegd_elementwise: return "aegd";
    case OptimizerKind::saegd: return "saegd";
    case OptimizerKind::aegdw: return "aegdw";
    case OptimizerKind::gd: return "gd";
    case OptimizerKind::gdm: return "gdm";
    case OptimizerKind::adam: return "adam";
  }
  return "?";
}

bool is_energy_based(OptimizerKind kind) {
  return kind == OptimizerKind::aegd_global || kind == OptimizerKind::aegd_elementwise ||
         kind == OptimizerKind::saegd || kind == OptimizerKind::aegdw;
}

bool is_stochastic(OptimizerKind kind) {
  return kind == OptimizerKind::saegd || kind == OptimizerKind::aegdw;
}

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::in_progress: return "ok";
    case RunStatus::budget_exhausted: return "budget";
    case RunStatus::gradient_tolerance: return "grad_tol";
    case RunStatus::target_reached: return "target";
    case RunStatus::f_change_tolerance: return "f_tol";
    case RunStatus::diverged: return "diverged";
  }
  return "?";
}

void OptimizerConfig::validate() const {
  if (!(base_step > 0.0)) throw std::invalid_argument("base step eta must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("momentum must be in [0, 1)");
  if (weight_decay < 0.0) throw std::invalid_argument("weight decay must be non-negative");
  if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0)
    throw std::invalid_argument("adam betas must be in [0, 1)");
  if (!(adam_epsilon > 0.0)) throw std::invalid_argument("adam epsilon must be positive");
}

double EnergyState::min_value() const {
  return *std::min_element(values.begin(), values.end());
}

double EnergyState::max_value() const {
  return *std::max_element(values.begin(), values.end());
}

EnergyState init_energy(const Objective& objective, std::span<const double> theta0,
                        const OptimizerConfig& config) {
  const double shifted = positive_shifted(objective.value(theta0), config.energy_shift);
  const double r0 = std::sqrt(shifted);
  EnergyState state;
  state.values.assign(config.mode == EnergyMode::global ? 1 : theta0.size(), r0);
  return state;
}

StepOutcome aegd_step_global(std::span<const double> theta, const EnergyState& r,
                             std::span<const double> grad_f, double f_value,
                             const OptimizerConfig& config) {
  check_finite_gradient(grad_f);
  const double shifted = positive_shifted(f_value, config.energy_shift);
  const double g_sqrt = std::sqrt(shifted);
  const double eta = config.base_step;
  const std::size_t n = theta.size();

  double grad_g_sq = 0.0;
  for (double g : grad_f) {
    const double v = g / (2.0 * g_sqrt);
    grad_g_sq += v * v;
  }
  const double r_next = r.values[0] / (1.0 + 2.0 * eta * grad_g_sq);

  StepOutcome out;
  out.new_params.resize(n);
  out.new_energy.values = {r_next};
  out.effective_steps = {eta * r_next / g_sqrt};
  out.displacement.resize(n);
  double disp_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = grad_f[i] / (2.0 * g_sqrt);
    const double d = -2.0 * eta * r_next * v;
    out.new_params[i] = theta[i] + d;
    out.displacement[i] = d;
    disp_sq += d * d;
  }
  out.displacement_sq = disp_sq;
  return out;
}

StepOutcome aegd_step_elementwise(std::span<const double> theta, const EnergyState& r,
                                  std::span<const double> grad_f, double f_value,
                                  const OptimizerConfig& config) {
  return elementwise_core(theta, r, f_value, grad_f, config.energy_shift, config.base_step, 0.0);
}

StepOutcome saegd_step(std::span<const double> theta, const EnergyState& r, double sampled_f,
                       std::span<const double> sampled_grad, const OptimizerConfig& config) {
  return elementwise_core(theta, r, sampled_f, sampled_grad, config.energy_shift,
                          config.base_step, 0.0);
}

StepOutcome aegdw_step(std::span<const double> theta, const EnergyState& r, double sampled_f,
                       std::span<const double> sampled_grad, const OptimizerConfig& config) {
  return elementwise_core(theta, r, sampled_f, sampled_grad, config.energy_shift,
                          config.base_step, config.weight_decay);
}

std::vector<double> gd_step(std::span<const double> theta, std::span<const double> grad_f,
                            double eta) {
  check_finite_gradient(grad_f);
  std::vector<double> next(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) next[i] = theta[i] - eta * grad_f[i];
  return next;
}

std::vector<double> gdm_step(std::span<const double> theta, std::span<const double> theta_prev,
                             std::span<const double> grad_f, double eta, double mu) {
  check_finite_gradient(grad_f);
  std::vector<double> next(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i)
    next[i] = theta[i] - eta * grad_f[i] + mu * (theta[i] - theta_prev[i]);
  return next;
}

std::vector<double> adam_step(std::span<const double> theta, AdamState& state,
                              std::span<const double> grad_f, double eta, double beta1,
                              double beta2, double epsilon) {
  check_finite_gradient(grad_f);
  const std::size_t n = theta.size();
  if (state.first_moment.empty()) {
    state.first_moment.assign(n, 0.0);
    state.second_moment.assign(n, 0.0);
    state.step_count = 0;
  }
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step_count));
  std::vector<double> next(n);
  for (std::size_t i = 0; i < n; ++i) {
    state.first_moment[i] = beta1 * state.first_moment[i] + (1.0 - beta1) * grad_f[i];
    state.second_moment[i] = beta2 * state.second_moment[i] + (1.0 - beta2) * grad_f[i] * grad_f[i];
    const double m_hat = state.first_moment[i] / bc1;
    const double v_hat = state.second_moment[i] / bc2;
    next[i] = theta[i] - eta * m_hat / (std::sqrt(v_hat) + epsilon);
  }
  return next;
}

namespace {

/// Shared iteration loop. `eval` fills the gradient and returns f at the
/// current iterate. For stochastic kinds it evaluates the sampled
/// component, which is also what the trace logs and what the lazy r0
/// initialization reads; a full-objective pass per step would defeat
/// sampling.
template <class EvalFn>
Trace run_loop(OptimizerKind kind, std::span<const double> theta0,
               const OptimizerConfig& config, const RunOptions& options, EvalFn&& eval) {
  config.validate();

  Trace trace;
  trace.kind = kind;
  trace.config = config;
  trace.initial_params.assign(theta0.begin(), theta0.end());

  const std::size_t n = theta0.size();
  std::vector<double> theta(theta0.begin(), theta0.end());
  std::vector<double> theta_prev(theta);  // heavy-ball history, theta_{-1} = theta_0
  std::vector<double> grad(n);
  EnergyState energy;
  AdamState adam;

  double eta = config.base_step;
  auto decay = options.stop.eta_decay;
  std::sort(decay.begin(), decay.end());
  std::size_t decay_cursor = 0;

  const long budget = options.stop.max_iterations;
  double prev_f = 0.0;
  bool have_prev_f = false;

  const bool stochastic = is_stochastic(kind);
  const bool energy_based = is_energy_based(kind);

  auto push_record = [&](long k, double f, double g_norm, const StepOutcome* step,
                         RunStatus status) {
    TraceRecord rec;
    rec.iteration = k;
    rec.f_value = f;
    rec.grad_norm = g_norm;
    rec.eta_base = eta;
    rec.status = status;
    if (energy_based && !energy.values.empty()) {
      rec.r_min = energy.min_value();
      rec.r_max = energy.max_value();
    }
    if (step != nullptr) {
      rec.eta_eff_min =
          *std::min_element(step->effective_steps.begin(), step->effective_steps.end());
      rec.eta_eff_max =
          *std::max_element(step->effective_steps.begin(), step->effective_steps.end());
      rec.displacement_sq = step->displacement_sq;
    }
    trace.records.push_back(rec);
  };

  for (long k = 0;; ++k) {
    while (decay_cursor < decay.size() && decay[decay_cursor].first == k) {
      eta *= decay[decay_cursor].second;
      ++decay_cursor;
    }

    const double f = eval(theta, grad);

    // Stochastic kinds initialize r from the first sampled component;
    // deterministic energy kinds from f(theta0). Always per-coordinate
    // for the stochastic rules.
    if (energy_based && energy.values.empty()) {
      const double shifted = f + config.energy_shift;
      if (!(shifted > 0.0)) throw EnergyShiftError("energy-shift violation: f + c <= 0");
      energy.values.assign(config.mode == EnergyMode::global && !stochastic ? 1 : n,
                           std::sqrt(shifted));
      if (options.record_vectors) trace.energies.push_back(energy.values);
    }

    const double g_norm = two_norm(grad);

    // Divergence guard: flag, record, stop; never throw.
    if (!std::isfinite(f) || std::abs(f) > kOverflowGuard || !all_finite(theta) ||
        inf_norm(theta) > kOverflowGuard || !all_finite(grad)) {
      trace.status = RunStatus::diverged;
      push_record(k, f, g_norm, nullptr, RunStatus::diverged);
      break;
    }

    RunStatus stop_status = RunStatus::in_progress;
    if (f <= options.stop.target_f)
      stop_status = RunStatus::target_reached;
    else if (options.stop.grad_norm_tol > 0.0 && g_norm <= options.stop.grad_norm_tol)
      stop_status = RunStatus::gradient_tolerance;
    else if (options.stop.f_change_tol > 0.0 && have_prev_f &&
             std::abs(f - prev_f) < options.stop.f_change_tol)
      stop_status = RunStatus::f_change_tolerance;
    else if (k >= budget)
      stop_status = RunStatus::budget_exhausted;

    if (stop_status != RunStatus::in_progress) {
      trace.status = stop_status;
      push_record(k, f, g_norm, nullptr, stop_status);
      break;
    }
    prev_f = f;
    have_prev_f = true;

    StepOutcome outcome;
    OptimizerConfig step_config = config;
    step_config.base_step = eta;
    switch (kind) {
      case OptimizerKind::aegd_global:
        outcome = aegd_step_global(theta, energy, grad, f, step_config);
        break;
      case OptimizerKind::aegd_elementwise:
        outcome = aegd_step_elementwise(theta, energy, grad, f, step_config);
        break;
      case OptimizerKind::saegd:
        outcome = saegd_step(theta, energy, f, grad, step_config);
        break;
      case OptimizerKind::aegdw:
        outcome = aegdw_step(theta, energy, f, grad, step_config);
        break;
      case OptimizerKind::gd:
        outcome.new_params = gd_step(theta, grad, eta);
        break;
      case OptimizerKind::gdm:
        outcome.new_params = gdm_step(theta, theta_prev, grad, eta, config.momentum);
        break;
      case OptimizerKind::adam:
        outcome.new_params = adam_step(theta, adam, grad, eta, config.adam_beta1,
                                       config.adam_beta2, config.adam_epsilon);
        break;
    }
    if (outcome.displacement.empty()) {
      // baseline rules return only the new iterate
      outcome.displacement.resize(n);
      double dsq = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        outcome.displacement[i] = outcome.new_params[i] - theta[i];
        dsq += outcome.displacement[i] * outcome.displacement[i];
      }
      outcome.displacement_sq = dsq;
      outcome.effective_steps = {eta};
    }

    if (k == 0 || (options.record_every > 0 && (k % options.record_every) == 0))
      push_record(k, f, g_norm, &outcome, RunStatus::in_progress);
    if (options.record_vectors) {
      if (energy_based) trace.energies.push_back(outcome.new_energy.values);
      trace.displacements.push_back(outcome.displacement);
      trace.step_etas.push_back(eta);
    }

    theta_prev = std::move(theta);
    theta = std::move(outcome.new_params);
    if (energy_based) energy = std::move(outcome.new_energy);
    trace.iterations = k + 1;
  }

  trace.final_params = std::move(theta);
  trace.final_energy = energy;
  return trace;
}

}  // namespace

Trace run(const Objective& objective, OptimizerKind kind, std::span<const double> theta0,
          const OptimizerConfig& config, const RunOptions& options) {
  if (is_stochastic(kind))
    throw std::invalid_argument("stochastic optimizer requires a finite-sum objective");
  return run_loop(kind, theta0, config, options,
                  [&objective](std::span<const double> x, std::span<double> g) {
                    return objective.value_and_gradient(x, g);
                  });
}

Trace run(const FiniteSumObjective& objective, OptimizerKind kind,
          std::span<const double> theta0, const OptimizerConfig& config,
          const RunOptions& options) {
  if (!is_stochastic(kind)) {
    return run_loop(kind, theta0, config, options,
                    [&objective](std::span<const double> x, std::span<double> g) {
                      return objective.value_and_gradient(x, g);
                    });
  }
  Sampler sampler(options.sampling, objective.count(), Rng(options.seed));
  return run_loop(kind, theta0, config, options,
                  [&objective, &sampler](std::span<const double> x, std::span<double> g) {
                    const SampledBatch batch = sampler.next();
                    auto [value, grad] = sampled_value_and_grad(objective, batch, x);
                    std::copy(grad.begin(), grad.end(), g.begin());
                    return value;
                  });
}

}  // namespace aegd
