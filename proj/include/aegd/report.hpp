#pragma once

#include <iosfwd>
#include <string>

#include "aegd/analysis.hpp"
#include "aegd/kmeans.hpp"
#include "aegd/optimizer.hpp"

namespace aegd {

/// CSV schema: k,f,grad_norm,r_min,r_max,eta_eff_min,eta_eff_max,disp_sq,status
/// one row per recorded iteration; doubles printed with %.17g so files
/// round-trip and identical runs produce identical bytes.
void write_trace_csv(std::ostream& out, const Trace& trace);
void write_trace_csv_file(const std::string& path, const Trace& trace);

/// Per-iteration energy trace (k,r_min,r_max), for the step-size sweep panels.
void write_energy_csv(std::ostream& out, const Trace& trace);

std::string threshold_report_json(const ThresholdReport& report);
std::string kmeans_result_json(const kmeans::ExperimentResult& result, const std::string& method,
                               double eta, std::uint64_t seed);

}  // namespace aegd
