#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aegd/rng.hpp"

namespace aegd {

/// Analytic constants of a test problem, used by the threshold and rate
/// analyses. Gradient bounds (grad_sup_norm) and the finite-sum lower
/// bound (sum_lower_bound) refer to a compact region containing the
/// trajectories of interest; they are re-verified against realized
/// trajectories where they matter.
struct SmoothnessProfile {
  double smoothness = 0.0;        // L
  double strong_convexity = 0.0;  // alpha, 0 if not strongly convex
  double pl_constant = 0.0;       // mu, 0 if unknown
  double grad_sup_norm = 0.0;     // bound on the gradient sup norm
  double sum_lower_bound = 0.0;   // a: lower bound on f_l + c (finite sums)
  double optimal_value = 0.0;     // f*
  std::vector<double> minimizer;  // a known minimizer, empty if unknown
};

/// Evaluable objective with analytic gradient.
class Objective {
 public:
  using ValueFn = std::function<double(std::span<const double>)>;
  using GradFn = std::function<void(std::span<const double>, std::span<double>)>;
  using FusedFn = std::function<double(std::span<const double>, std::span<double>)>;

  Objective(std::string name, int dim, ValueFn value, GradFn grad,
            std::optional<SmoothnessProfile> profile = std::nullopt,
            FusedFn fused = nullptr)
      : name_(std::move(name)),
        dim_(dim),
        value_(std::move(value)),
        grad_(std::move(grad)),
        fused_(std::move(fused)),
        profile_(std::move(profile)) {}

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }

  double value(std::span<const double> x) const { return value_(x); }
  void gradient(std::span<const double> x, std::span<double> out) const { grad_(x, out); }

  /// Value and gradient from one evaluation. Objectives whose value and
  /// gradient share state (e.g. a cluster assignment) supply a fused
  /// implementation so both come from the same evaluation.
  double value_and_gradient(std::span<const double> x, std::span<double> grad_out) const {
    if (fused_) return fused_(x, grad_out);
    grad_(x, grad_out);
    return value_(x);
  }

  const std::optional<SmoothnessProfile>& profile() const { return profile_; }

 private:
  std::string name_;
  int dim_;
  ValueFn value_;
  GradFn grad_;
  FusedFn fused_;
  std::optional<SmoothnessProfile> profile_;
};

// Built-in benchmark objectives.

/// 100-D ill-conditioned quadratic: sum of x_{2i-1}^2 + x_{2i}^2/100.
/// Strongly convex, alpha = 0.02, L = 2, minimum 0 at the origin.
Objective quadratic100();

/// 2-D Rosenbrock: (1-x1)^2 + 100(x2-x1^2)^2, minimum 0 at (1,1).
Objective rosenbrock2d();

/// Non-convex 1-D objective x^2 + 3 sin^2(x). Satisfies the PL
/// inequality with mu = 1/32 and f* = 0 despite non-convexity.
Objective pl_example1d();

/// 1-D toy x^2; constants valid on |x| <= 1. Used by the threshold
/// analyses where hand-computable bounds are wanted.
Objective toy_quadratic1d();

/// Mean of m component objectives: f = (1/m) sum f_i.
class FiniteSumObjective {
 public:
  explicit FiniteSumObjective(std::vector<Objective> components);

  int dim() const { return dim_; }
  int count() const { return static_cast<int>(components_.size()); }
  const Objective& component(int i) const { return components_[static_cast<std::size_t>(i)]; }

  double value(std::span<const double> x) const;
  void gradient(std::span<const double> x, std::span<double> out) const;
  double value_and_gradient(std::span<const double> x, std::span<double> grad_out) const;

  /// The full objective as a plain Objective (for deterministic baselines).
  Objective combined(std::string name = "finite-sum") const;

 private:
  std::vector<Objective> components_;
  int dim_;
};

/// Two-component 1-D sum: mean of x^2 and (x-2)^2. The stock instance for
/// the stochastic estimates; with c = 1 every component satisfies
/// f_l + c >= 1, and |f_l'| <= 8 on the box |x - 1| <= 3.
FiniteSumObjective two_component_sum1d();

enum class SamplingKind {
  minibatch,       // uniform size-b subset, weight m/b on the subset
  iid_component,   // one component i.i.d. per step
  shuffled_epoch,  // one component per step, random order within each epoch
};

struct SamplingScheme {
  SamplingKind kind = SamplingKind::iid_component;
  int batch_size = 1;  // used by minibatch
};

/// A drawn sampling vector xi in sparse form: xi_i = weight for i in
/// indices, 0 elsewhere. E[xi_j] = 1 for every j under all schemes.
struct SampledBatch {
  std::vector<int> indices;
  double weight = 1.0;
};

/// One independent draw from the scheme. For shuffled_epoch this draws a
/// single uniform component (the epoch structure lives in Sampler).
SampledBatch sample_batch(const SamplingScheme& scheme, int m, Rng& rng);

/// Stateful sampler; required for shuffled_epoch, pass-through otherwise.
class Sampler {
 public:
  Sampler(SamplingScheme scheme, int m, Rng rng);
  SampledBatch next();

 private:
  SamplingScheme scheme_;
  int m_;
  Rng rng_;
  std::vector<int> order_;
  int cursor_ = 0;
};

/// f_xi(theta) and grad f_xi(theta) for a drawn batch:
/// f_xi = (1/m) sum_j xi_j f_j.
std::pair<double, std::vector<double>> sampled_value_and_grad(
    const FiniteSumObjective& fs, const SampledBatch& batch, std::span<const double> x);

}  // namespace aegd
