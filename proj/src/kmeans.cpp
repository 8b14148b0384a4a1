#include "aegd/kmeans.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "aegd/optimizer.hpp"
#include "aegd/parallel.hpp"

namespace aegd::kmeans {

namespace {

double sq_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// Assignment with random tie-breaks plus the error in one pass.
std::vector<int> assign_impl(const Dataset& data, const CentroidSet& centroids, Rng& rng,
                             double* error_out) {
  std::vector<int> assignment(static_cast<std::size_t>(data.count));
  double total = 0.0;
  std::vector<int> tied;
  for (int i = 0; i < data.count; ++i) {
    const auto p = data.point(i);
    double best = sq_distance(centroids.centroid(0), p);
    tied.assign(1, 0);
    for (int j = 1; j < centroids.k; ++j) {
      const double d = sq_distance(centroids.centroid(j), p);
      if (d < best) {
        best = d;
        tied.assign(1, j);
      } else if (d == best) {
        tied.push_back(j);
      }
    }
    assignment[static_cast<std::size_t>(i)] =
        tied.size() == 1 ? tied[0]
                         : tied[rng.next_below(static_cast<std::uint64_t>(tied.size()))];
    total += best;
  }
  if (error_out != nullptr) *error_out = total / (2.0 * static_cast<double>(data.count));
  return assignment;
}

std::vector<double> gradient_from_assignment(const Dataset& data, const CentroidSet& centroids,
                                             std::span<const int> assignment) {
  std::vector<double> grad(centroids.coords.size(), 0.0);
  std::vector<int> cluster_size(static_cast<std::size_t>(centroids.k), 0);
  for (int i = 0; i < data.count; ++i) {
    const int j = assignment[static_cast<std::size_t>(i)];
    cluster_size[static_cast<std::size_t>(j)] += 1;
    const auto p = data.point(i);
    double* block = grad.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(data.dim);
    for (int dd = 0; dd < data.dim; ++dd) block[dd] -= p[static_cast<std::size_t>(dd)];
  }
  for (int j = 0; j < centroids.k; ++j) {
    const auto x = centroids.centroid(j);
    double* block = grad.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(data.dim);
    for (int dd = 0; dd < data.dim; ++dd)
      block[dd] += static_cast<double>(cluster_size[static_cast<std::size_t>(j)]) *
                   x[static_cast<std::size_t>(dd)];
  }
  const double inv_m = 1.0 / static_cast<double>(data.count);
  for (auto& g : grad) g *= inv_m;
  return grad;
}

}  // namespace

double quantization_error(const Dataset& data, const CentroidSet& centroids) {
  double total = 0.0;
  for (int i = 0; i < data.count; ++i) {
    const auto p = data.point(i);
    double best = sq_distance(centroids.centroid(0), p);
    for (int j = 1; j < centroids.k; ++j)
      best = std::min(best, sq_distance(centroids.centroid(j), p));
    total += best;
  }
  return total / (2.0 * static_cast<double>(data.count));
}

std::vector<int> assign_points(const Dataset& data, const CentroidSet& centroids, Rng& rng) {
  return assign_impl(data, centroids, rng, nullptr);
}

std::vector<double> kmeans_gradient(const Dataset& data, const CentroidSet& centroids, Rng& rng) {
  const auto assignment = assign_impl(data, centroids, rng, nullptr);
  return gradient_from_assignment(data, centroids, assignment);
}

CentroidSet em_step(const Dataset& data, const CentroidSet& centroids, Rng& rng) {
  const auto assignment = assign_impl(data, centroids, rng, nullptr);
  CentroidSet next = centroids;
  std::vector<double> sums(centroids.coords.size(), 0.0);
  std::vector<int> sizes(static_cast<std::size_t>(centroids.k), 0);
  for (int i = 0; i < data.count; ++i) {
    const int j = assignment[static_cast<std::size_t>(i)];
    sizes[static_cast<std::size_t>(j)] += 1;
    const auto p = data.point(i);
    double* block = sums.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(data.dim);
    for (int dd = 0; dd < data.dim; ++dd) block[dd] += p[static_cast<std::size_t>(dd)];
  }
  for (int j = 0; j < centroids.k; ++j) {
    if (sizes[static_cast<std::size_t>(j)] == 0) continue;  // empty cluster keeps its centroid
    auto x = next.centroid(j);
    const double* block =
        sums.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(data.dim);
    for (int dd = 0; dd < data.dim; ++dd)
      x[static_cast<std::size_t>(dd)] =
          block[dd] / static_cast<double>(sizes[static_cast<std::size_t>(j)]);
  }
  return next;
}

Dataset load_iris(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset not found: " + path);

  Dataset data;
  data.dim = 4;
  std::string line;
  int row_number = 0;
  bool parsed_any = false;
  while (std::getline(in, line)) {
    ++row_number;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;

    std::vector<double> fields;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        // trailing junk after the number means a non-numeric cell
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) {
          numeric = false;
          break;
        }
        fields.push_back(v);
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (!parsed_any && fields.empty()) continue;  // header row
      if (fields.size() >= 4) {
        // label column after the features; keep the numeric prefix
        fields.resize(4);
      } else {
        throw std::runtime_error("malformed row " + std::to_string(row_number));
      }
    }
    if (fields.size() < 4)
      throw std::runtime_error("dimension mismatch at row " + std::to_string(row_number));
    for (int dd = 0; dd < 4; ++dd) data.values.push_back(fields[static_cast<std::size_t>(dd)]);
    data.count += 1;
    parsed_any = true;
  }
  if (!parsed_any) throw std::runtime_error("malformed row 0: no data rows");
  return data;
}

CentroidSet random_init(const Dataset& data, int k, Rng& rng) {
  if (k > data.count) throw std::invalid_argument("random_init: k exceeds dataset size");
  CentroidSet centroids;
  centroids.k = k;
  centroids.dim = data.dim;
  centroids.coords.reserve(static_cast<std::size_t>(k) * static_cast<std::size_t>(data.dim));
  for (int idx : rng.pick_distinct(data.count, k)) {
    const auto p = data.point(idx);
    centroids.coords.insert(centroids.coords.end(), p.begin(), p.end());
  }
  return centroids;
}

Objective clustering_objective(const Dataset& data, int k, Rng rng) {
  const int dim = k * data.dim;
  auto shared_rng = std::make_shared<Rng>(rng);
  auto as_centroids = [k, d = data.dim](std::span<const double> x) {
    CentroidSet c;
    c.k = k;
    c.dim = d;
    c.coords.assign(x.begin(), x.end());
    return c;
  };
  auto value = [data, as_centroids](std::span<const double> x) {
    return quantization_error(data, as_centroids(x));
  };
  auto grad = [data, as_centroids, shared_rng](std::span<const double> x, std::span<double> g) {
    const auto gv = kmeans_gradient(data, as_centroids(x), *shared_rng);
    std::copy(gv.begin(), gv.end(), g.begin());
  };
  // fused path draws one assignment for both the value and the gradient
  auto fused = [data, as_centroids, shared_rng](std::span<const double> x, std::span<double> g) {
    const CentroidSet c = as_centroids(x);
    double error = 0.0;
    const auto assignment = assign_impl(data, c, *shared_rng, &error);
    const auto gv = gradient_from_assignment(data, c, assignment);
    std::copy(gv.begin(), gv.end(), g.begin());
    return error;
  };
  return Objective("kmeans", dim, value, grad, std::nullopt, fused);
}

Method method_from_string(const std::string& name) {
  if (name == "em") return Method::em;
  if (name == "gd") return Method::gd;
  if (name == "aegd") return Method::aegd;
  throw std::invalid_argument("unknown k-means method: " + name);
}

namespace {

/// Runs one trial to the stock stopping rule (error change < 1e-10 or
/// 1e4 iterations) and returns the terminal quantization error.
double run_trial(const Dataset& data, int k, Method method, double eta, Rng trial_rng) {
  Rng init_rng = trial_rng.stream(0);
  Rng tie_rng = trial_rng.stream(1);
  CentroidSet centroids = random_init(data, k, init_rng);

  if (method == Method::em) {
    double prev = quantization_error(data, centroids);
    for (long it = 0; it < 10000; ++it) {
      centroids = em_step(data, centroids, tie_rng);
      const double err = quantization_error(data, centroids);
      if (std::abs(prev - err) < 1e-10) return err;
      prev = err;
    }
    return quantization_error(data, centroids);
  }

  const Objective objective = clustering_objective(data, k, tie_rng);
  OptimizerConfig config;
  config.base_step = eta;
  config.energy_shift = 1.0;  // quantization error >= 0, so f + 1 > 0
  RunOptions options;
  options.stop.max_iterations = 10000;
  options.stop.f_change_tol = 1e-10;
  options.record_every = 0;
  const OptimizerKind kind =
      method == Method::aegd ? OptimizerKind::aegd_elementwise : OptimizerKind::gd;
  const Trace trace = run(objective, kind, centroids.coords, config, options);
  return trace.final_f();
}

}  // namespace

ExperimentResult run_kmeans_experiment(const Dataset& data, int k, Method method, double eta,
                                       int trials, std::uint64_t seed, int workers) {
  ExperimentResult result;
  result.terminal_errors.assign(static_cast<std::size_t>(trials), 0.0);
  const Rng master(seed);
  for_each_index(trials, workers, [&](int t) {
    result.terminal_errors[static_cast<std::size_t>(t)] =
        run_trial(data, k, method, eta, master.stream(static_cast<std::uint64_t>(t)));
  });
  int improved = 0;
  for (double e : result.terminal_errors) {
    if (e < kImprovedBasinThreshold) ++improved;
  }
  result.improved_frequency = static_cast<double>(improved) / static_cast<double>(trials);
  return result;
}

}  // namespace aegd::kmeans
