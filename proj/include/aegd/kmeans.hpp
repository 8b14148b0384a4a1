#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aegd/objective.hpp"
#include "aegd/rng.hpp"

namespace aegd::kmeans {

struct Dataset {
  std::vector<double> values;  // row-major, count x dim
  int count = 0;
  int dim = 0;

  std::span<const double> point(int i) const {
    return {values.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
};

struct CentroidSet {
  std::vector<double> coords;  // flattened, k x dim
  int k = 0;
  int dim = 0;

  std::span<const double> centroid(int j) const {
    return {coords.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
  std::span<double> centroid(int j) {
    return {coords.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
};

/// f(x) = (1/2m) sum_i min_j |x_j - p_i|^2.
double quantization_error(const Dataset& data, const CentroidSet& centroids);

/// Nearest-centroid assignment; exact distance ties are broken uniformly
/// at random.
std::vector<int> assign_points(const Dataset& data, const CentroidSet& centroids, Rng& rng);

/// Block-structured subgradient: block j is (1/m) sum_{i in C_j} (x_j - p_i);
/// empty clusters contribute a zero block.
std::vector<double> kmeans_gradient(const Dataset& data, const CentroidSet& centroids, Rng& rng);

/// One Lloyd iteration: assign, then move every nonempty cluster's
/// centroid to its cluster mean. Never increases the quantization error.
CentroidSet em_step(const Dataset& data, const CentroidSet& centroids, Rng& rng);

/// CSV with 4 numeric feature columns; an optional header row and a
/// trailing label column are skipped. Throws std::runtime_error with
/// "malformed row"/"dimension mismatch" messages on bad input.
Dataset load_iris(const std::string& path);

/// K distinct data points chosen uniformly without replacement.
CentroidSet random_init(const Dataset& data, int k, Rng& rng);

/// The clustering objective over flattened centroid coordinates, with the
/// fused value+gradient sharing one assignment draw per evaluation.
Objective clustering_objective(const Dataset& data, int k, Rng rng);

enum class Method { em, gd, aegd };

Method method_from_string(const std::string& name);

/// Terminal errors below this value count as the improved basin
/// (midpoint of the two observed basins on Iris).
inline constexpr double kImprovedBasinThreshold = 0.37;

struct ExperimentResult {
  std::vector<double> terminal_errors;  // one per trial, in trial order
  double improved_frequency = 0.0;      // fraction of trials below threshold
};

/// `trials` independent optimizations from random data-point
/// initializations, each on its own rng stream so results do not depend
/// on the worker count.
ExperimentResult run_kmeans_experiment(const Dataset& data, int k, Method method, double eta,
                                       int trials, std::uint64_t seed, int workers = 0);

}  // namespace aegd::kmeans
