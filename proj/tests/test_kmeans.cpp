#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "aegd/analysis.hpp"
#include "aegd/kmeans.hpp"
#include "aegd/optimizer.hpp"
#include "oracles.hpp"

using namespace aegd;
using namespace aegd::kmeans;

namespace {

Dataset line_points(std::initializer_list<double> xs) {
  Dataset data;
  data.dim = 1;
  for (double x : xs) {
    data.values.push_back(x);
    data.count += 1;
  }
  return data;
}

CentroidSet centroids1d(std::initializer_list<double> xs) {
  CentroidSet c;
  c.dim = 1;
  c.k = static_cast<int>(xs.size());
  c.coords = xs;
  return c;
}

std::filesystem::path temp_csv(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("quantization error") {
  CHECK(quantization_error(line_points({0.0, 2.0}), centroids1d({1.0})) == doctest::Approx(0.5));
  CHECK(quantization_error(line_points({0.0, 2.0}), centroids1d({0.0, 2.0})) == 0.0);

  // invariance under centroid and point permutations
  Dataset data;
  data.dim = 2;
  Rng rng(8);
  for (int i = 0; i < 12; ++i) {
    data.values.push_back(rng.uniform(-3.0, 3.0));
    data.values.push_back(rng.uniform(-3.0, 3.0));
    data.count += 1;
  }
  CentroidSet c;
  c.dim = 2;
  c.k = 3;
  for (int i = 0; i < 6; ++i) c.coords.push_back(rng.uniform(-3.0, 3.0));
  const double base = quantization_error(data, c);

  CentroidSet swapped = c;
  std::swap(swapped.coords[0], swapped.coords[4]);
  std::swap(swapped.coords[1], swapped.coords[5]);
  CHECK(quantization_error(data, swapped) == doctest::Approx(base).epsilon(1e-15));

  Dataset reversed;
  reversed.dim = 2;
  reversed.count = data.count;
  for (int i = data.count - 1; i >= 0; --i) {
    const auto p = data.point(i);
    reversed.values.push_back(p[0]);
    reversed.values.push_back(p[1]);
  }
  CHECK(quantization_error(reversed, c) == doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("gradient examples") {
  Rng rng(1);
  SUBCASE("centroid at the cluster mean has zero gradient") {
    const auto g = kmeans_gradient(line_points({0.0, 2.0}), centroids1d({1.0}), rng);
    CHECK(g[0] == 0.0);
  }
  SUBCASE("split assignment") {
    const auto g = kmeans_gradient(line_points({0.0, 2.0}), centroids1d({0.5, 1.5}), rng);
    CHECK(g[0] == doctest::Approx(0.25));
    CHECK(g[1] == doctest::Approx(-0.25));
  }
  SUBCASE("empty cluster contributes a zero block") {
    const auto g = kmeans_gradient(line_points({0.0, 0.2}), centroids1d({0.1, 5.0}), rng);
    CHECK(g[1] == 0.0);
  }
}

TEST_CASE("equidistant points are assigned uniformly at random") {
  const Dataset data = line_points({1.0});
  const CentroidSet c = centroids1d({0.0, 2.0});
  Rng rng(99);
  int first = 0;
  const int draws = 10000;
  for (int d = 0; d < draws; ++d) {
    const auto assignment = assign_points(data, c, rng);
    if (assignment[0] == 0) ++first;
  }
  CHECK(static_cast<double>(first) / draws == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("em step") {
  Rng rng(2);
  SUBCASE("one Lloyd step lands on cluster means") {
    const auto next = em_step(line_points({0.0, 2.0}), centroids1d({0.1, 1.9}), rng);
    CHECK(next.coords[0] == doctest::Approx(0.0));
    CHECK(next.coords[1] == doctest::Approx(2.0));
    CHECK(quantization_error(line_points({0.0, 2.0}), next) == 0.0);
  }
  SUBCASE("cluster means are a fixed point") {
    const auto next = em_step(line_points({0.0, 2.0}), centroids1d({0.0, 2.0}), rng);
    CHECK(next.coords[0] == 0.0);
    CHECK(next.coords[1] == 2.0);
  }
  SUBCASE("single centroid moves to the global mean") {
    const auto next = em_step(line_points({0.0, 2.0}), centroids1d({5.0}), rng);
    CHECK(next.coords[0] == doctest::Approx(1.0));
  }
}

TEST_CASE("em never increases the quantization error") {
  Rng rng(33);
  for (int instance = 0; instance < 20; ++instance) {
    Dataset data;
    data.dim = 2;
    const int m = 5 + static_cast<int>(rng.next_below(20));
    for (int i = 0; i < m; ++i) {
      data.values.push_back(rng.uniform(-5.0, 5.0));
      data.values.push_back(rng.uniform(-5.0, 5.0));
      data.count += 1;
    }
    CentroidSet c = random_init(data, 3, rng);
    double err = quantization_error(data, c);
    for (int step = 0; step < 10; ++step) {
      c = em_step(data, c, rng);
      const double next_err = quantization_error(data, c);
      CHECK(next_err <= err + 1e-12);
      err = next_err;
    }
  }
}

TEST_CASE("gradient agrees with finite differences away from ties") {
  Rng rng(44);
  Dataset data;
  data.dim = 2;
  for (int i = 0; i < 15; ++i) {
    data.values.push_back(rng.uniform(-4.0, 4.0));
    data.values.push_back(rng.uniform(-4.0, 4.0));
    data.count += 1;
  }
  const Objective objective = clustering_objective(data, 2, Rng(7));
  for (int probe = 0; probe < 10; ++probe) {
    std::vector<double> x(4);
    for (auto& v : x) v = rng.uniform(-4.0, 4.0);
    CHECK(oracles::gradient_mismatch(objective, x) < 1e-6);
  }
}

TEST_CASE("aegd on the clustering objective satisfies the energy identity") {
  Rng rng(3);
  Dataset data;
  data.dim = 2;
  for (int i = 0; i < 20; ++i) {
    data.values.push_back(rng.uniform(-3.0, 3.0));
    data.values.push_back(rng.uniform(-3.0, 3.0));
    data.count += 1;
  }
  const Objective objective = clustering_objective(data, 3, Rng(5));
  const CentroidSet init = random_init(data, 3, rng);

  OptimizerConfig config;
  config.base_step = 2.0;
  RunOptions options;
  options.stop.max_iterations = 500;
  options.record_vectors = true;
  const Trace trace =
      run(objective, OptimizerKind::aegd_elementwise, init.coords, config, options);
  CHECK(audit_energy_identity(trace).max_rel_residual < 1e-12);
}

TEST_CASE("load_iris") {
  SUBCASE("bundled dataset has 150 four-dimensional rows") {
    const Dataset data = load_iris(std::string(AEGD_SOURCE_DIR) + "/data/iris.csv");
    CHECK(data.count == 150);
    CHECK(data.dim == 4);
    // first row of the classic file
    CHECK(data.point(0)[0] == doctest::Approx(5.1));
    CHECK(data.point(0)[3] == doctest::Approx(0.2));
  }
  SUBCASE("empty file is a malformed-row error") {
    const auto path = temp_csv("aegd_empty.csv", "");
    CHECK_THROWS_WITH_AS(load_iris(path.string()), doctest::Contains("malformed row"),
                         std::runtime_error);
  }
  SUBCASE("header and numeric label column are dropped") {
    const auto path = temp_csv("aegd_labeled.csv",
                               "a,b,c,d,label\n1,2,3,4,9\n5,6,7,8,9\n");
    const Dataset data = load_iris(path.string());
    CHECK(data.count == 2);
    CHECK(data.dim == 4);
    CHECK(data.point(1)[3] == doctest::Approx(8.0));
  }
  SUBCASE("ragged row reports its number") {
    const auto path = temp_csv("aegd_ragged.csv", "1,2,3,4\n1,2\n");
    CHECK_THROWS_WITH_AS(load_iris(path.string()), doctest::Contains("row 2"),
                         std::runtime_error);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_WITH_AS(load_iris("/nonexistent/iris.csv"),
                         doctest::Contains("dataset not found"), std::runtime_error);
  }
}

TEST_CASE("random_init") {
  const Dataset data = line_points({0.0, 1.0, 2.0});
  SUBCASE("k = m selects the whole dataset") {
    Rng rng(5);
    const CentroidSet c = random_init(data, 3, rng);
    std::multiset<double> chosen(c.coords.begin(), c.coords.end());
    CHECK(chosen == std::multiset<double>{0.0, 1.0, 2.0});
  }
  SUBCASE("k > m is rejected") {
    Rng rng(5);
    CHECK_THROWS_AS(random_init(data, 4, rng), std::invalid_argument);
  }
  SUBCASE("pairs are uniform over the 3 possibilities") {
    Rng rng(6);
    std::map<std::pair<double, double>, int> counts;
    const int draws = 10000;
    for (int d = 0; d < draws; ++d) {
      const CentroidSet c = random_init(data, 2, rng);
      const auto mm = std::minmax(c.coords[0], c.coords[1]);
      counts[mm] += 1;
    }
    REQUIRE(counts.size() == 3);
    for (const auto& [pair, count] : counts)
      CHECK(static_cast<double>(count) / draws == doctest::Approx(1.0 / 3.0).epsilon(0.06));
  }
  SUBCASE("single pick is uniform over points") {
    Rng rng(7);
    std::map<double, int> counts;
    const int draws = 9000;
    for (int d = 0; d < draws; ++d) counts[random_init(data, 1, rng).coords[0]] += 1;
    for (const auto& [value, count] : counts)
      CHECK(static_cast<double>(count) / draws == doctest::Approx(1.0 / 3.0).epsilon(0.06));
  }
}

TEST_CASE("experiment with centroids on every point reaches zero error") {
  const Dataset data = line_points({0.0, 1.0, 2.0, 3.0});
  for (Method method : {Method::em, Method::gd, Method::aegd}) {
    const auto result = run_kmeans_experiment(data, 4, method, 0.5, 1, 11, 1);
    REQUIRE(result.terminal_errors.size() == 1);
    CHECK(result.terminal_errors[0] == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(result.improved_frequency == 1.0);
  }
}
