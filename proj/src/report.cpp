#include "aegd/report.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace aegd {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << "k,f,grad_norm,r_min,r_max,eta_eff_min,eta_eff_max,disp_sq,status\n";
  for (const auto& rec : trace.records) {
    out << rec.iteration << ',' << fmt_double(rec.f_value) << ',' << fmt_double(rec.grad_norm)
        << ',' << fmt_double(rec.r_min) << ',' << fmt_double(rec.r_max) << ','
        << fmt_double(rec.eta_eff_min) << ',' << fmt_double(rec.eta_eff_max) << ','
        << fmt_double(rec.displacement_sq) << ',' << to_string(rec.status) << '\n';
  }
}

void write_trace_csv_file(const std::string& path, const Trace& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  write_trace_csv(out, trace);
}

void write_energy_csv(std::ostream& out, const Trace& trace) {
  out << "k,r_min,r_max\n";
  for (const auto& rec : trace.records)
    out << rec.iteration << ',' << fmt_double(rec.r_min) << ',' << fmt_double(rec.r_max) << '\n';
}

std::string threshold_report_json(const ThresholdReport& report) {
  nlohmann::json j;
  j["eta_low"] = report.eta_low;
  j["eta_high"] = report.eta_high;
  j["eta_threshold"] = report.eta_threshold();
  j["tau"] = report.tau;
  j["tau_tilde"] = report.tau_tilde;
  j["budget"] = report.budget;
  return j.dump(2);
}

std::string kmeans_result_json(const kmeans::ExperimentResult& result, const std::string& method,
                               double eta, std::uint64_t seed) {
  nlohmann::json j;
  j["method"] = method;
  j["eta"] = eta;
  j["seed"] = seed;
  j["trials"] = result.terminal_errors.size();
  j["improved_frequency"] = result.improved_frequency;
  j["basin_threshold"] = kmeans::kImprovedBasinThreshold;
  j["terminal_errors"] = result.terminal_errors;
  int improved = 0, stuck = 0;
  for (double e : result.terminal_errors) (e < kmeans::kImprovedBasinThreshold ? improved : stuck)++;
  j["histogram"] = {{"improved_basin", improved}, {"upper_basin", stuck}};
  return j.dump(2);
}

}  // namespace aegd
