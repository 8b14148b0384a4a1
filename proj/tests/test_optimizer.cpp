#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "aegd/objective.hpp"
#include "aegd/optimizer.hpp"
#include "oracles.hpp"

using namespace aegd;

namespace {

const double kSqrt2 = std::sqrt(2.0);

OptimizerConfig unit_config(double eta = 1.0, double c = 1.0) {
  OptimizerConfig config;
  config.base_step = eta;
  config.energy_shift = c;
  return config;
}

}  // namespace

TEST_CASE("init_energy") {
  const Objective toy = toy_quadratic1d();
  OptimizerConfig config = unit_config();

  SUBCASE("r0 = sqrt(f + c) at theta0 = 1") {
    const EnergyState r = init_energy(toy, std::vector<double>{1.0}, config);
    REQUIRE(r.values.size() == 1);
    CHECK(r.values[0] == doctest::Approx(kSqrt2).epsilon(1e-15));
  }
  SUBCASE("r0 = 1 at the minimizer") {
    const EnergyState r = init_energy(toy, std::vector<double>{0.0}, config);
    CHECK(r.values[0] == 1.0);
  }
  SUBCASE("f + c = 0 is rejected") {
    config.energy_shift = 0.0;
    CHECK_THROWS_WITH_AS(init_energy(toy, std::vector<double>{0.0}, config),
                         doctest::Contains("energy-shift violation"), EnergyShiftError);
  }
  SUBCASE("element-wise mode replicates r0 per coordinate") {
    const Objective q = quadratic100();
    const EnergyState r = init_energy(q, std::vector<double>(100, 1.0), config);
    REQUIRE(r.values.size() == 100);
    for (double v : r.values) CHECK(v == doctest::Approx(std::sqrt(51.5)).epsilon(1e-15));
  }
}

TEST_CASE("global step hand-derived values on x^2") {
  EnergyState r{{kSqrt2}};
  const std::vector<double> theta{1.0};
  const std::vector<double> grad{2.0};
  const StepOutcome out = aegd_step_global(theta, r, grad, 1.0, unit_config());

  // grad g = 1/sqrt(2); r1 = sqrt(2)/2; theta1 = 1 - 2*1*(sqrt(2)/2)*(1/sqrt(2)) = 0
  CHECK(out.new_energy.values[0] == doctest::Approx(kSqrt2 / 2.0).epsilon(1e-15));
  CHECK(std::abs(out.new_params[0]) < 1e-15);

  // the energy identity at these values reads 0.5 = 2 - 0.5 - 1
  const double r1 = out.new_energy.values[0];
  const double identity_rhs = 2.0 - (r1 - kSqrt2) * (r1 - kSqrt2) - out.displacement_sq;
  CHECK(r1 * r1 == doctest::Approx(identity_rhs).epsilon(1e-12));
}

TEST_CASE("zero gradient is an exact fixed point of every rule") {
  const std::vector<double> theta{0.7, -1.3};
  const std::vector<double> zero{0.0, 0.0};
  EnergyState r{{1.5, 2.5}};
  OptimizerConfig config = unit_config(0.3);

  const StepOutcome ew = aegd_step_elementwise(theta, r, zero, 2.0, config);
  CHECK(ew.new_params == theta);
  CHECK(ew.new_energy.values == r.values);

  EnergyState rg{{1.5}};
  const StepOutcome gl = aegd_step_global(theta, rg, zero, 2.0, config);
  CHECK(gl.new_params == theta);
  CHECK(gl.new_energy.values == rg.values);

  const StepOutcome st = saegd_step(theta, r, 2.0, zero, config);
  CHECK(st.new_params == theta);

  CHECK(gd_step(theta, zero, 0.5) == theta);
  CHECK(gdm_step(theta, theta, zero, 0.5, 0.9) == theta);

  AdamState adam;
  CHECK(adam_step(theta, adam, zero, 0.001, 0.9, 0.999, 1e-8) == theta);

  config.weight_decay = 0.2;
  const StepOutcome wd = aegdw_step(std::vector<double>{0.0}, EnergyState{{1.0}}, 0.0,
                                    std::vector<double>{0.0}, config);
  CHECK(wd.new_params[0] == 0.0);  // origin stays fixed under decay
}

TEST_CASE("element-wise step leaves zero-partial coordinates untouched") {
  // f(x, y) = x^2 + y^2 at (1, 0): the y coordinate must not move at all
  EnergyState r{{kSqrt2, kSqrt2}};
  const std::vector<double> theta{1.0, 0.0};
  const std::vector<double> grad{2.0, 0.0};
  const StepOutcome out = aegd_step_elementwise(theta, r, grad, 1.0, unit_config());

  CHECK(out.new_energy.values[1] == kSqrt2);
  CHECK(out.new_params[1] == 0.0);
  CHECK(out.new_energy.values[0] == doctest::Approx(kSqrt2 / 2.0).epsilon(1e-15));
  CHECK(std::abs(out.new_params[0]) < 1e-15);
}

TEST_CASE("global and element-wise agree bitwise in 1-D") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const double theta = rng.uniform(-3.0, 3.0);
    const double grad = rng.uniform(-5.0, 5.0);
    const double f = rng.uniform(0.0, 10.0);
    const double r0 = rng.uniform(0.1, 4.0);
    const OptimizerConfig config = unit_config(rng.log_uniform(1e-3, 1e2));

    const StepOutcome a = aegd_step_global(std::vector<double>{theta}, EnergyState{{r0}},
                                           std::vector<double>{grad}, f, config);
    const StepOutcome b = aegd_step_elementwise(std::vector<double>{theta}, EnergyState{{r0}},
                                                std::vector<double>{grad}, f, config);
    CHECK(a.new_params[0] == b.new_params[0]);
    CHECK(a.new_energy.values[0] == b.new_energy.values[0]);
  }
}

TEST_CASE("saegd on one sampled component matches the 1-D hand example") {
  const FiniteSumObjective fs = two_component_sum1d();
  SampledBatch batch;
  batch.indices = {0};  // f1 = x^2
  batch.weight = 2.0;
  auto [fv, grad] = sampled_value_and_grad(fs, batch, std::vector<double>{1.0});
  REQUIRE(fv == doctest::Approx(1.0));
  REQUIRE(grad[0] == doctest::Approx(2.0));

  const StepOutcome out =
      saegd_step(std::vector<double>{1.0}, EnergyState{{kSqrt2}}, fv, grad, unit_config());
  CHECK(std::abs(out.new_params[0]) < 1e-15);
  CHECK(out.new_energy.values[0] == doctest::Approx(kSqrt2 / 2.0).epsilon(1e-15));
}

TEST_CASE("full-batch sampling degenerates to the deterministic step bitwise") {
  Rng rng(23);
  std::vector<Objective> components;
  for (int i = 0; i < 3; ++i) {
    const double a = rng.uniform(0.5, 2.0);
    const double b = rng.uniform(-1.0, 1.0);
    components.emplace_back(
        "comp", 2,
        [a, b](std::span<const double> x) {
          return a * (x[0] - b) * (x[0] - b) + (x[1] + b) * (x[1] + b);
        },
        [a, b](std::span<const double> x, std::span<double> g) {
          g[0] = 2.0 * a * (x[0] - b);
          g[1] = 2.0 * (x[1] + b);
        });
  }
  const FiniteSumObjective fs(components);
  const std::vector<double> theta{0.4, -0.9};

  SampledBatch full;
  full.indices = {0, 1, 2};
  full.weight = 1.0;
  auto [fv, grad] = sampled_value_and_grad(fs, full, theta);

  std::vector<double> exact_grad(2);
  const double exact_f = fs.value_and_gradient(theta, exact_grad);
  REQUIRE(fv == exact_f);
  REQUIRE(grad == exact_grad);

  EnergyState r{{1.2, 0.8}};
  const OptimizerConfig config = unit_config(0.7);
  const StepOutcome stochastic = saegd_step(theta, r, fv, grad, config);
  const StepOutcome deterministic = aegd_step_elementwise(theta, r, exact_grad, exact_f, config);
  CHECK(stochastic.new_params == deterministic.new_params);
  CHECK(stochastic.new_energy.values == deterministic.new_energy.values);
}

TEST_CASE("aegdw") {
  SUBCASE("lambda = 0 reduces to saegd bitwise") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
      const std::vector<double> theta{rng.uniform(-2.0, 2.0)};
      const std::vector<double> grad{rng.uniform(-4.0, 4.0)};
      const double f = rng.uniform(0.0, 5.0);
      EnergyState r{{rng.uniform(0.2, 3.0)}};
      const OptimizerConfig config = unit_config(0.5);
      const StepOutcome a = aegdw_step(theta, r, f, grad, config);
      const StepOutcome b = saegd_step(theta, r, f, grad, config);
      CHECK(a.new_params == b.new_params);
      CHECK(a.new_energy.values == b.new_energy.values);
    }
  }
  SUBCASE("hand-derived decay step") {
    // AEGD part moves 1 -> 0; decay subtracts eta*lambda*theta = 0.1
    OptimizerConfig config = unit_config();
    config.weight_decay = 0.1;
    const StepOutcome out = aegdw_step(std::vector<double>{1.0}, EnergyState{{kSqrt2}}, 1.0,
                                       std::vector<double>{2.0}, config);
    CHECK(out.new_params[0] == doctest::Approx(-0.1).epsilon(1e-14));
    // energy update ignores the decay
    CHECK(out.new_energy.values[0] == doctest::Approx(kSqrt2 / 2.0).epsilon(1e-15));
  }
}

TEST_CASE("gd and gdm steps") {
  CHECK(gd_step(std::vector<double>{1.0}, std::vector<double>{2.0}, 0.1)[0] ==
        doctest::Approx(0.8).epsilon(1e-15));
  CHECK(gd_step(std::vector<double>{1.0}, std::vector<double>{2.0}, 1.0)[0] ==
        doctest::Approx(-1.0).epsilon(1e-15));

  SUBCASE("mu = 0 is plain gd bitwise") {
    const std::vector<double> theta{0.3, -2.0};
    const std::vector<double> prev{0.1, -1.0};
    const std::vector<double> grad{1.0, 2.0};
    CHECK(gdm_step(theta, prev, grad, 0.25, 0.0) == gd_step(theta, grad, 0.25));
  }
  SUBCASE("two hand steps on x^2 with momentum") {
    // theta0 = theta_{-1} = 1, eta = 0.1, mu = 0.9
    const auto theta1 =
        gdm_step(std::vector<double>{1.0}, std::vector<double>{1.0}, std::vector<double>{2.0},
                 0.1, 0.9);
    CHECK(theta1[0] == doctest::Approx(0.8).epsilon(1e-15));
    const auto theta2 = gdm_step(theta1, std::vector<double>{1.0}, std::vector<double>{1.6}, 0.1,
                                 0.9);
    CHECK(theta2[0] == doctest::Approx(0.46).epsilon(1e-14));
  }
}

TEST_CASE("adam steps") {
  SUBCASE("first bias-corrected step moves by about eta") {
    AdamState state;
    const auto theta1 = adam_step(std::vector<double>{1.0}, state, std::vector<double>{2.0},
                                  0.001, 0.9, 0.999, 1e-8);
    CHECK(theta1[0] == doctest::Approx(0.999).epsilon(1e-6));
  }
  SUBCASE("steady state displacement approaches eta * sign(grad)") {
    AdamState state;
    std::vector<double> theta{5.0};
    const std::vector<double> grad{3.0};
    double last_disp = 0.0;
    for (int k = 0; k < 10000; ++k) {
      const auto next = adam_step(theta, state, grad, 0.001, 0.9, 0.999, 1e-8);
      last_disp = next[0] - theta[0];
      theta = next;
    }
    CHECK(std::abs(last_disp) == doctest::Approx(0.001).epsilon(0.01));
  }
}

TEST_CASE("step rules reject non-finite gradients") {
  const std::vector<double> theta{1.0};
  const std::vector<double> bad{std::numeric_limits<double>::quiet_NaN()};
  EnergyState r{{1.0}};
  CHECK_THROWS_AS(aegd_step_global(theta, r, bad, 1.0, unit_config()), NonFiniteGradientError);
  CHECK_THROWS_AS(gd_step(theta, bad, 0.1), NonFiniteGradientError);
  CHECK_THROWS_AS(gdm_step(theta, theta, bad, 0.1, 0.5), NonFiniteGradientError);
  AdamState adam;
  CHECK_THROWS_AS(adam_step(theta, adam, bad, 0.1, 0.9, 0.999, 1e-8), NonFiniteGradientError);
}

TEST_CASE("steps reject an invalid energy shift") {
  const std::vector<double> theta{1.0};
  const std::vector<double> grad{2.0};
  EnergyState r{{1.0}};
  OptimizerConfig config = unit_config(1.0, -2.0);  // f + c = -1
  CHECK_THROWS_WITH_AS(aegd_step_global(theta, r, grad, 1.0, config),
                       doctest::Contains("energy-shift violation"), EnergyShiftError);
  CHECK_THROWS_WITH_AS(saegd_step(theta, r, 1.0, grad, config),
                       doctest::Contains("energy-shift violation"), EnergyShiftError);
}

TEST_CASE("run: single step on the toy problem") {
  const Objective toy = toy_quadratic1d();
  RunOptions options;
  options.stop.max_iterations = 1;
  const Trace trace =
      run(toy, OptimizerKind::aegd_elementwise, std::vector<double>{1.0}, unit_config(), options);
  REQUIRE(trace.records.size() == 2);
  CHECK(std::abs(trace.final_params[0]) < 1e-15);
  CHECK(trace.final_energy.values[0] == doctest::Approx(kSqrt2 / 2.0).epsilon(1e-15));
  CHECK(trace.status == RunStatus::budget_exhausted);
}

TEST_CASE("run: zero budget records only the initial state") {
  const Objective toy = toy_quadratic1d();
  RunOptions options;
  options.stop.max_iterations = 0;
  const Trace trace =
      run(toy, OptimizerKind::aegd_elementwise, std::vector<double>{1.0}, unit_config(), options);
  REQUIRE(trace.records.size() == 1);
  CHECK(trace.records[0].iteration == 0);
  CHECK(trace.records[0].f_value == 1.0);
  CHECK(trace.final_params[0] == 1.0);
}

TEST_CASE("run: gd beyond the stability bound is flagged divergent") {
  const Objective q = quadratic100();
  OptimizerConfig config = unit_config(1.01);
  RunOptions options;
  options.stop.max_iterations = 30000;
  const Trace trace = run(q, OptimizerKind::gd, std::vector<double>(100, 1.0), config, options);
  CHECK(trace.status == RunStatus::diverged);
  CHECK(trace.records.back().status == RunStatus::diverged);

  // and within the bound it reaches the target
  config.base_step = 0.99;
  options.stop.target_f = 1e-8;
  const Trace good = run(q, OptimizerKind::gd, std::vector<double>(100, 1.0), config, options);
  CHECK(good.status == RunStatus::target_reached);
}

TEST_CASE("run: gradient tolerance and eta decay schedule") {
  const Objective toy = toy_quadratic1d();
  OptimizerConfig config = unit_config(0.1);
  RunOptions options;
  options.stop.max_iterations = 100000;
  options.stop.grad_norm_tol = 1e-6;
  const Trace trace =
      run(toy, OptimizerKind::aegd_elementwise, std::vector<double>{1.0}, config, options);
  CHECK(trace.status == RunStatus::gradient_tolerance);
  CHECK(trace.records.back().grad_norm <= 1e-6);

  options.stop.grad_norm_tol = 0.0;
  options.stop.max_iterations = 20;
  options.stop.eta_decay = {{10, 0.5}};
  const Trace decayed =
      run(toy, OptimizerKind::aegd_elementwise, std::vector<double>{1.0}, config, options);
  CHECK(decayed.records[5].eta_base == doctest::Approx(0.1));
  CHECK(decayed.records[15].eta_base == doctest::Approx(0.05));
}

TEST_CASE("run: stochastic runs are deterministic given the seed") {
  const FiniteSumObjective fs = two_component_sum1d();
  OptimizerConfig config = unit_config(0.1);
  RunOptions options;
  options.stop.max_iterations = 500;
  options.seed = 99;
  options.record_vectors = true;

  const Trace a = run(fs, OptimizerKind::saegd, std::vector<double>{1.0}, config, options);
  const Trace b = run(fs, OptimizerKind::saegd, std::vector<double>{1.0}, config, options);
  REQUIRE(a.records.size() == b.records.size());
  CHECK(a.final_params == b.final_params);
  CHECK(a.final_energy.values == b.final_energy.values);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].f_value == b.records[i].f_value);
    CHECK(a.records[i].r_min == b.records[i].r_min);
  }

  // different seed, different path
  options.seed = 100;
  const Trace c = run(fs, OptimizerKind::saegd, std::vector<double>{1.0}, config, options);
  CHECK(c.final_params != a.final_params);
}

TEST_CASE("run: per-sample energy-shift violations are hard errors") {
  // second component dips below -c on part of the path
  std::vector<Objective> components;
  components.emplace_back(
      "ok", 1, [](std::span<const double> x) { return x[0] * x[0]; },
      [](std::span<const double> x, std::span<double> g) { g[0] = 2.0 * x[0]; });
  components.emplace_back(
      "low", 1, [](std::span<const double> x) { return x[0] * x[0] - 5.0; },
      [](std::span<const double> x, std::span<double> g) { g[0] = 2.0 * x[0]; });
  const FiniteSumObjective fs({components});
  RunOptions options;
  options.stop.max_iterations = 50;
  options.seed = 3;
  CHECK_THROWS_WITH_AS(
      run(fs, OptimizerKind::saegd, std::vector<double>{0.5}, unit_config(0.1), options),
      doctest::Contains("energy-shift violation"), EnergyShiftError);
}

TEST_CASE("run: stochastic kinds require a finite-sum objective") {
  const Objective toy = toy_quadratic1d();
  RunOptions options;
  CHECK_THROWS_AS(
      run(toy, OptimizerKind::saegd, std::vector<double>{1.0}, unit_config(), options),
      std::invalid_argument);
}

TEST_CASE("config validation") {
  OptimizerConfig config;
  config.base_step = 0.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = OptimizerConfig{};
  config.momentum = 1.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = OptimizerConfig{};
  config.weight_decay = -0.1;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("library step matches the longhand reference on random inputs") {
  Rng rng(54321);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.next_below(5);
    std::vector<double> theta(n), grad(n), r0(n);
    for (auto& v : theta) v = rng.uniform(-3.0, 3.0);
    for (auto& v : grad) v = rng.uniform(-5.0, 5.0);
    for (auto& v : r0) v = rng.uniform(0.1, 3.0);
    const double f = rng.uniform(0.0, 9.0);
    const double eta = rng.log_uniform(1e-4, 1e3);

    const auto reference = oracles::reference_elementwise_step(theta, r0, grad, f, 1.0, eta);
    const StepOutcome out =
        aegd_step_elementwise(theta, EnergyState{r0}, grad, f, unit_config(eta));
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(out.new_energy.values[i] == doctest::Approx(reference.r_next[i]).epsilon(1e-15));
      CHECK(out.new_params[i] == doctest::Approx(reference.theta_next[i]).epsilon(1e-15));
    }
  }
}
