#include "aegd/objective.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace aegd {

double Rng::log_uniform(double lo, double hi) {
  return std::exp(uniform(std::log(lo), std::log(hi)));
}

std::vector<int> Rng::pick_distinct(int m, int k) {
  if (k > m) throw std::invalid_argument("pick_distinct: k > m");
  std::vector<int> pool(static_cast<std::size_t>(m));
  std::iota(pool.begin(), pool.end(), 0);
  // partial Fisher-Yates: the first k entries are a uniform subset
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(next_below(static_cast<std::uint64_t>(m - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

void Rng::shuffle(std::span<int> values) {
  const int n = static_cast<int>(values.size());
  for (int i = 0; i < n - 1; ++i) {
    const int j = i + static_cast<int>(next_below(static_cast<std::uint64_t>(n - i)));
    std::swap(values[static_cast<std::size_t>(i)], values[static_cast<std::size_t>(j)]);
  }
}

Objective quadratic100() {
  constexpr int n = 100;
  auto value = [](std::span<const double> x) {
    double f = 0.0;
    for (int i = 0; i < n; i += 2) {
      f += x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
      f += x[static_cast<std::size_t>(i + 1)] * x[static_cast<std::size_t>(i + 1)] / 100.0;
    }
    return f;
  };
  auto grad = [](std::span<const double> x, std::span<double> g) {
    for (int i = 0; i < n; i += 2) {
      g[static_cast<std::size_t>(i)] = 2.0 * x[static_cast<std::size_t>(i)];
      g[static_cast<std::size_t>(i + 1)] = 0.02 * x[static_cast<std::size_t>(i + 1)];
    }
  };
  SmoothnessProfile profile;
  profile.smoothness = 2.0;
  profile.strong_convexity = 0.02;
  profile.pl_constant = 0.02;  // strong convexity implies PL with mu = alpha
  profile.optimal_value = 0.0;
  profile.minimizer.assign(n, 0.0);
  // gradient bound over the box |x_i| <= 1 reached from the stock start
  profile.grad_sup_norm = std::sqrt(50.0 * 4.0 + 50.0 * 0.0004);
  return Objective("quad100", n, value, grad, profile);
}

Objective rosenbrock2d() {
  auto value = [](std::span<const double> x) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    return a * a + 100.0 * b * b;
  };
  auto grad = [](std::span<const double> x, std::span<double> g) {
    const double b = x[1] - x[0] * x[0];
    g[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
  };
  SmoothnessProfile profile;
  profile.optimal_value = 0.0;
  profile.minimizer = {1.0, 1.0};
  // L is region-dependent for Rosenbrock (unbounded Hessian); left unset.
  return Objective("rosen2d", 2, value, grad, profile);
}

Objective pl_example1d() {
  auto value = [](std::span<const double> x) {
    const double s = std::sin(x[0]);
    return x[0] * x[0] + 3.0 * s * s;
  };
  auto grad = [](std::span<const double> x, std::span<double> g) {
    g[0] = 2.0 * x[0] + 3.0 * std::sin(2.0 * x[0]);
  };
  SmoothnessProfile profile;
  profile.smoothness = 8.0;  // f'' = 2 + 6 cos(2x) in [-4, 8]
  profile.pl_constant = 1.0 / 32.0;
  profile.optimal_value = 0.0;
  profile.minimizer = {0.0};
  return Objective("pl1d", 1, value, grad, profile);
}

Objective toy_quadratic1d() {
  auto value = [](std::span<const double> x) { return x[0] * x[0]; };
  auto grad = [](std::span<const double> x, std::span<double> g) { g[0] = 2.0 * x[0]; };
  SmoothnessProfile profile;
  profile.smoothness = 2.0;
  profile.strong_convexity = 2.0;
  profile.pl_constant = 2.0;
  profile.grad_sup_norm = 2.0;  // valid on |x| <= 1
  profile.optimal_value = 0.0;
  profile.minimizer = {0.0};
  return Objective("toy1d", 1, value, grad, profile);
}

FiniteSumObjective::FiniteSumObjective(std::vector<Objective> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("finite sum needs at least one component");
  dim_ = components_.front().dim();
  for (const auto& c : components_) {
    if (c.dim() != dim_) throw std::invalid_argument("finite sum components disagree on dimension");
  }
}

double FiniteSumObjective::value(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& c : components_) sum += c.value(x);
  // multiply by 1/m (not divide) so a full ordered batch reproduces this
  // value bit for bit through the sampled path
  return sum * (1.0 / static_cast<double>(components_.size()));
}

void FiniteSumObjective::gradient(std::span<const double> x, std::span<double> out) const {
  std::vector<double> tmp(static_cast<std::size_t>(dim_));
  for (auto& v : out) v = 0.0;
  for (const auto& c : components_) {
    c.gradient(x, tmp);
    for (int i = 0; i < dim_; ++i) out[static_cast<std::size_t>(i)] += tmp[static_cast<std::size_t>(i)];
  }
  const double inv_m = 1.0 / static_cast<double>(components_.size());
  for (auto& v : out) v *= inv_m;
}

double FiniteSumObjective::value_and_gradient(std::span<const double> x,
                                              std::span<double> grad_out) const {
  gradient(x, grad_out);
  return value(x);
}

Objective FiniteSumObjective::combined(std::string name) const {
  auto self = *this;  // value copy keeps the Objective self-contained
  auto value = [self](std::span<const double> x) { return self.value(x); };
  auto grad = [self](std::span<const double> x, std::span<double> g) { self.gradient(x, g); };
  return Objective(std::move(name), dim_, value, grad);
}

FiniteSumObjective two_component_sum1d() {
  auto sq = Objective(
      "x^2", 1, [](std::span<const double> x) { return x[0] * x[0]; },
      [](std::span<const double> x, std::span<double> g) { g[0] = 2.0 * x[0]; });
  auto shifted = Objective(
      "(x-2)^2", 1, [](std::span<const double> x) { return (x[0] - 2.0) * (x[0] - 2.0); },
      [](std::span<const double> x, std::span<double> g) { g[0] = 2.0 * (x[0] - 2.0); });
  return FiniteSumObjective({std::move(sq), std::move(shifted)});
}

SampledBatch sample_batch(const SamplingScheme& scheme, int m, Rng& rng) {
  if (m < 1) throw std::invalid_argument("sample_batch: empty component set");
  SampledBatch batch;
  switch (scheme.kind) {
    case SamplingKind::minibatch: {
      const int b = scheme.batch_size;
      if (b < 1 || b > m) throw std::invalid_argument("sample_batch: batch size out of range");
      batch.indices = rng.pick_distinct(m, b);
      batch.weight = static_cast<double>(m) / static_cast<double>(b);
      break;
    }
    case SamplingKind::iid_component:
    case SamplingKind::shuffled_epoch: {
      batch.indices = {static_cast<int>(rng.next_below(static_cast<std::uint64_t>(m)))};
      batch.weight = static_cast<double>(m);
      break;
    }
  }
  return batch;
}

Sampler::Sampler(SamplingScheme scheme, int m, Rng rng)
    : scheme_(scheme), m_(m), rng_(rng) {
  if (scheme_.kind == SamplingKind::shuffled_epoch) {
    order_.resize(static_cast<std::size_t>(m_));
    std::iota(order_.begin(), order_.end(), 0);
  }
}

SampledBatch Sampler::next() {
  if (scheme_.kind != SamplingKind::shuffled_epoch) return sample_batch(scheme_, m_, rng_);
  if (cursor_ == 0) rng_.shuffle(order_);
  SampledBatch batch;
  batch.indices = {order_[static_cast<std::size_t>(cursor_)]};
  batch.weight = static_cast<double>(m_);
  cursor_ = (cursor_ + 1) % m_;
  return batch;
}

std::pair<double, std::vector<double>> sampled_value_and_grad(const FiniteSumObjective& fs,
                                                              const SampledBatch& batch,
                                                              std::span<const double> x) {
  const double scale = batch.weight / static_cast<double>(fs.count());
  double value = 0.0;
  std::vector<double> grad(static_cast<std::size_t>(fs.dim()), 0.0);
  std::vector<double> tmp(static_cast<std::size_t>(fs.dim()));
  for (int idx : batch.indices) {
    const auto& c = fs.component(idx);
    value += c.value(x);
    c.gradient(x, tmp);
    for (int i = 0; i < fs.dim(); ++i) grad[static_cast<std::size_t>(i)] += tmp[static_cast<std::size_t>(i)];
  }
  value *= scale;
  for (auto& g : grad) g *= scale;
  return {value, std::move(grad)};
}

}  // namespace aegd
