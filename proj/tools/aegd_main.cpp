// Command-line front end: single runs, step-size sweeps, clustering
// experiments, and theory verification suites, all emitting deterministic
// CSV/JSON artifacts. Exit codes: 0 success, 1 usage or configuration
// error, 2 numerical divergence / failed verification.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aegd/analysis.hpp"
#include "aegd/kmeans.hpp"
#include "aegd/objective.hpp"
#include "aegd/optimizer.hpp"
#include "aegd/report.hpp"
#include "aegd/verify.hpp"

namespace {

using namespace aegd;

struct Preset {
  Objective objective;
  std::vector<double> theta0;
  std::optional<FiniteSumObjective> finite_sum;
};

Preset make_preset(const std::string& name) {
  if (name == "quad100") return {quadratic100(), std::vector<double>(100, 1.0), std::nullopt};
  if (name == "rosen2d") return {rosenbrock2d(), {-3.0, -4.0}, std::nullopt};
  if (name == "pl1d") return {pl_example1d(), {3.0}, std::nullopt};
  if (name == "toy1d") return {toy_quadratic1d(), {1.0}, std::nullopt};
  if (name == "twosum1d") {
    FiniteSumObjective fs = two_component_sum1d();
    return {fs.combined("twosum1d"), {1.0}, fs};
  }
  throw CLI::ValidationError("--problem", "unknown problem preset: " + name);
}

OptimizerKind kind_from_string(const std::string& name) {
  for (OptimizerKind kind :
       {OptimizerKind::aegd_elementwise, OptimizerKind::aegd_global, OptimizerKind::saegd,
        OptimizerKind::aegdw, OptimizerKind::gd, OptimizerKind::gdm, OptimizerKind::adam}) {
    if (to_string(kind) == name) return kind;
  }
  throw CLI::ValidationError("--optimizer", "unknown optimizer: " + name);
}

std::vector<double> parse_vector(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) values.push_back(std::stod(cell));
  return values;
}

std::vector<std::pair<long, double>> parse_decay(const std::string& text) {
  // "k0:factor[,k0:factor...]"
  std::vector<std::pair<long, double>> stages;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw CLI::ValidationError("--decay", "expected k0:factor, got " + item);
    stages.emplace_back(std::stol(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
  }
  return stages;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << content;
}

// ---- run ----------------------------------------------------------------

struct RunArgs {
  std::string problem = "quad100";
  std::string optimizer = "aegd";
  double eta = 0.1;
  double c = 1.0;
  double mu = 0.9;
  double lambda = 0.0;
  double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
  long iters = 10000;
  double grad_tol = 0.0;
  double target_f = -std::numeric_limits<double>::infinity();
  double f_change_tol = 0.0;
  std::string decay;
  std::string theta0;
  std::uint64_t seed = 0;
  int batch = 1;
  std::string sampling = "iid";
  std::string out = "trace.csv";
};

int cmd_run(const RunArgs& args) {
  const Preset preset = make_preset(args.problem);
  const OptimizerKind kind = kind_from_string(args.optimizer);

  OptimizerConfig config;
  config.base_step = args.eta;
  config.energy_shift = args.c;
  config.mode =
      kind == OptimizerKind::aegd_global ? EnergyMode::global : EnergyMode::element_wise;
  config.momentum = kind == OptimizerKind::gdm ? args.mu : 0.0;
  config.weight_decay = args.lambda;
  config.adam_beta1 = args.beta1;
  config.adam_beta2 = args.beta2;
  config.adam_epsilon = args.epsilon;

  RunOptions options;
  options.stop.max_iterations = args.iters;
  options.stop.grad_norm_tol = args.grad_tol;
  options.stop.target_f = args.target_f;
  options.stop.f_change_tol = args.f_change_tol;
  if (!args.decay.empty()) options.stop.eta_decay = parse_decay(args.decay);
  options.seed = args.seed;
  if (args.sampling == "iid") options.sampling = {SamplingKind::iid_component, 1};
  else if (args.sampling == "shuffled") options.sampling = {SamplingKind::shuffled_epoch, 1};
  else if (args.sampling == "minibatch") options.sampling = {SamplingKind::minibatch, args.batch};
  else throw CLI::ValidationError("--sampling", "unknown sampling scheme: " + args.sampling);

  const std::vector<double> theta0 =
      args.theta0.empty() ? preset.theta0 : parse_vector(args.theta0);

  Trace trace;
  if (is_stochastic(kind)) {
    if (!preset.finite_sum)
      throw CLI::ValidationError("--optimizer",
                                 "stochastic optimizer needs a finite-sum problem (twosum1d)");
    trace = run(*preset.finite_sum, kind, theta0, config, options);
  } else {
    trace = run(preset.objective, kind, theta0, config, options);
  }

  write_trace_csv_file(args.out, trace);
  std::printf("%s on %s: %ld iterations, final f = %.6g, status %s -> %s\n",
              args.optimizer.c_str(), args.problem.c_str(), trace.iterations, trace.final_f(),
              to_string(trace.status).c_str(), args.out.c_str());
  return trace.status == RunStatus::diverged ? 2 : 0;
}

// ---- sweep --------------------------------------------------------------

struct SweepArgs {
  std::string problem = "quad100";
  std::string etas;
  std::string bisect;
  long budget = 100000;
  double c = 1.0;
  std::string theta0;
  std::string out = "sweep.json";
  std::string trace_dir;
};

int cmd_sweep(const SweepArgs& args) {
  const Preset preset = make_preset(args.problem);
  const std::vector<double> theta0 =
      args.theta0.empty() ? preset.theta0 : parse_vector(args.theta0);
  nlohmann::json out;
  out["problem"] = args.problem;
  out["budget"] = args.budget;

  if (!args.etas.empty()) {
    const double r0 = std::sqrt(preset.objective.value(theta0) + args.c);
    nlohmann::json rows = nlohmann::json::array();
    for (double eta : parse_vector(args.etas)) {
      OptimizerConfig config;
      config.base_step = eta;
      config.energy_shift = args.c;
      RunOptions options;
      options.stop.max_iterations = args.budget;
      options.record_every = args.trace_dir.empty() ? 0 : 1;
      const Trace trace =
          run(preset.objective, OptimizerKind::aegd_elementwise, theta0, config, options);
      const double r_min = trace.final_energy.min_value();
      nlohmann::json row;
      row["eta"] = eta;
      row["terminal_r_min"] = r_min;
      row["classification"] = r_min > 1e-6 * r0 ? "r*>0" : "r*~0";
      rows.push_back(row);
      if (!args.trace_dir.empty()) {
        std::filesystem::create_directories(args.trace_dir);
        char name[64];
        std::snprintf(name, sizeof(name), "r_eta_%g.csv", eta);
        std::ofstream f(std::filesystem::path(args.trace_dir) / name);
        write_energy_csv(f, trace);
      }
    }
    out["grid"] = rows;
  }

  if (!args.bisect.empty()) {
    const auto bracket = parse_vector(args.bisect);
    if (bracket.size() != 2) throw CLI::ValidationError("--bisect", "expected lo,hi");
    const ThresholdReport report = find_eta_threshold(preset.objective, theta0, args.c,
                                                      bracket[0], bracket[1], args.budget);
    out["threshold"] = nlohmann::json::parse(threshold_report_json(report));
  }
  if (args.etas.empty() && args.bisect.empty())
    throw CLI::ValidationError("sweep", "need --etas and/or --bisect");

  write_text_file(args.out, out.dump(2) + "\n");
  std::printf("sweep on %s -> %s\n", args.problem.c_str(), args.out.c_str());
  return 0;
}

// ---- kmeans -------------------------------------------------------------

struct KmeansArgs {
  std::string data = "data/iris.csv";
  int k = 3;
  std::string method = "aegd";
  double eta = 6.5;
  int trials = 100;
  std::uint64_t seed = 1;
  std::string out = "kmeans.json";
};

int cmd_kmeans(const KmeansArgs& args) {
  const kmeans::Dataset dataset = kmeans::load_iris(args.data);
  const auto result = kmeans::run_kmeans_experiment(
      dataset, args.k, kmeans::method_from_string(args.method), args.eta, args.trials, args.seed);
  write_text_file(args.out, kmeans_result_json(result, args.method, args.eta, args.seed) + "\n");
  std::printf("kmeans %s (eta %.3g, %d trials): improved-basin frequency %.2f -> %s\n",
              args.method.c_str(), args.eta, args.trials, result.improved_frequency,
              args.out.c_str());
  return 0;
}

// ---- verify -------------------------------------------------------------

int cmd_verify(const std::string& suite_name, const std::string& out_path) {
  SuiteResult result;
  if (suite_name == "identity") result = verify_identity_suite();
  else if (suite_name == "thresholds") result = verify_thresholds_suite();
  else if (suite_name == "rates") result = verify_rates_suite();
  else if (suite_name == "stochastic") result = verify_stochastic_suite();
  else throw CLI::ValidationError("--suite", "unknown suite: " + suite_name);

  nlohmann::json j;
  j["suite"] = result.name;
  j["passed"] = result.passed();
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& line : result.lines) {
    std::printf("[%s] %s: %s\n", line.passed ? "PASS" : "FAIL", line.label.c_str(),
                line.detail.c_str());
    checks.push_back({{"label", line.label}, {"passed", line.passed}, {"detail", line.detail}});
  }
  j["checks"] = checks;
  if (!out_path.empty()) write_text_file(out_path, j.dump(2) + "\n");
  return result.passed() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-adaptive gradient descent: runs, sweeps, clustering, verification"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Configuration file (key=value; [section] per subcommand)");

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Run one optimization and write a trace CSV");
  run_cmd->add_option("--problem", run_args.problem, "quad100|rosen2d|pl1d|toy1d|twosum1d");
  run_cmd->add_option("--optimizer", run_args.optimizer, "aegd|aegd-global|saegd|aegdw|gd|gdm|adam");
  run_cmd->add_option("--eta", run_args.eta, "base step size")->check(CLI::PositiveNumber);
  run_cmd->add_option("--c", run_args.c, "energy shift");
  run_cmd->add_option("--mu", run_args.mu, "momentum (gdm)");
  run_cmd->add_option("--lambda", run_args.lambda, "decoupled weight decay (aegdw)");
  run_cmd->add_option("--beta1", run_args.beta1, "adam beta1");
  run_cmd->add_option("--beta2", run_args.beta2, "adam beta2");
  run_cmd->add_option("--epsilon", run_args.epsilon, "adam epsilon");
  run_cmd->add_option("--iters", run_args.iters, "iteration budget");
  run_cmd->add_option("--grad-tol", run_args.grad_tol, "gradient norm tolerance");
  run_cmd->add_option("--target-f", run_args.target_f, "stop when f <= target");
  run_cmd->add_option("--f-change-tol", run_args.f_change_tol, "stop when |df| < tol");
  run_cmd->add_option("--decay", run_args.decay, "eta decay stages k0:factor[,...]");
  run_cmd->add_option("--theta0", run_args.theta0, "initial point, comma separated");
  run_cmd->add_option("--seed", run_args.seed, "rng seed (stochastic runs)");
  run_cmd->add_option("--sampling", run_args.sampling, "iid|shuffled|minibatch");
  run_cmd->add_option("--batch", run_args.batch, "minibatch size");
  run_cmd->add_option("--out", run_args.out, "trace CSV path");

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Step-size grid and/or threshold bisection");
  sweep_cmd->add_option("--problem", sweep_args.problem, "problem preset");
  sweep_cmd->add_option("--etas", sweep_args.etas, "comma-separated eta grid");
  sweep_cmd->add_option("--bisect", sweep_args.bisect, "bracket lo,hi for the threshold search");
  sweep_cmd->add_option("--budget", sweep_args.budget, "iterations per classification run");
  sweep_cmd->add_option("--c", sweep_args.c, "energy shift");
  sweep_cmd->add_option("--theta0", sweep_args.theta0, "initial point override");
  sweep_cmd->add_option("--out", sweep_args.out, "JSON report path");
  sweep_cmd->add_option("--trace-dir", sweep_args.trace_dir, "directory for per-eta r-trace CSVs");

  KmeansArgs kmeans_args;
  auto* kmeans_cmd = app.add_subcommand("kmeans", "Clustering experiment over random restarts");
  kmeans_cmd->add_option("--data", kmeans_args.data, "dataset CSV path");
  kmeans_cmd->add_option("--k", kmeans_args.k, "number of centroids");
  kmeans_cmd->add_option("--method", kmeans_args.method, "em|gd|aegd");
  kmeans_cmd->add_option("--eta", kmeans_args.eta, "base step (gd/aegd)");
  kmeans_cmd->add_option("--trials", kmeans_args.trials, "independent restarts");
  kmeans_cmd->add_option("--seed", kmeans_args.seed, "master seed");
  kmeans_cmd->add_option("--out", kmeans_args.out, "JSON histogram path");

  std::string suite_name;
  std::string verify_out;
  auto* verify_cmd = app.add_subcommand("verify", "Run a verification suite");
  verify_cmd->add_option("--suite", suite_name, "identity|thresholds|rates|stochastic")
      ->required();
  verify_cmd->add_option("--out", verify_out, "JSON summary path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(run_args);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_args);
    if (kmeans_cmd->parsed()) return cmd_kmeans(kmeans_args);
    if (verify_cmd->parsed()) return cmd_verify(suite_name, verify_out);
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
