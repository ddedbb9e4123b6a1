#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "enrich/study/study.hpp"

namespace enrich::study {

// FNV-1a over the canonical configuration text; embedded in the manifest
// header so outputs are traceable to their inputs.
std::uint64_t config_hash(const std::string& canonical_text);

std::string manifest_line(std::uint64_t seed, std::uint64_t hash);

// Per-trial outcome rows, one CSV per scenario. UTF-8, LF, '.' decimal.
void write_outcomes_csv(const std::string& path, const ScenarioResult& sr,
                        const std::string& manifest);
std::vector<OutcomeRow> read_outcomes_csv(const std::string& path);

// Aggregated report with standard errors.
void write_report_csv(const std::string& path, const StudyResult& result,
                      const std::string& manifest);

// Long-format (scenario, method, metric, value, se) rows for plotting.
void write_plotdata_csv(const std::string& path, const StudyResult& result,
                        const std::string& manifest);

// Human-readable summary table.
void write_summary_txt(const std::string& path, const StudyResult& result);

// Strong-control scan output.
void write_scan_csv(const std::string& path, const ScanResult& result,
                    const std::string& manifest);

// Flat key-value design report (zeta, info1_req, m1, m2, mF, d1_stage1,
// d_total, i_max, a1, b1, a2, b2, alpha_spend, beta_spend).
struct DesignReport {
  design::DesignSpec spec;
  design::EventsPlan plan;
  design::Boundaries planned_boundaries;
};
void write_design_report(const std::string& path, const DesignReport& report,
                         const std::string& manifest);
DesignReport read_design_report(const std::string& path);

std::string format_double(double v);  // deterministic shortest round-trip form

}  // namespace enrich::study
