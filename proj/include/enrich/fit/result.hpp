#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "enrich/design/types.hpp"

namespace enrich::fit {

enum class Method { cond_score, cox, cox_tvc, rmst };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::cond_score: return "cond_score";
    case Method::cox: return "cox";
    case Method::cox_tvc: return "cox_tvc";
    default: return "rmst";
  }
}

// One engine's output for one population at one analysis, on the common
// benefit scale (theta > 0 favors treatment; survival effects enter as
// theta = -eta).
struct AnalysisResult {
  Method method = Method::cox;
  design::Group group = design::Group::s1;
  int analysis = 1;
  double theta_hat = 0.0;
  double info = 0.0;  // inverse variance of theta_hat
  double z = 0.0;     // theta_hat * sqrt(info)
  bool converged = false;
  int iterations = 0;
  double residual_norm = 0.0;
  std::string note;
};

// CSV export of result rows: method, group, k, theta_hat, info, z, converged.
inline void write_results_csv(const std::vector<AnalysisResult>& results,
                              const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "method,group,k,theta_hat,info,z,converged\n";
  char buf[160];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%d,%.17g,%.17g,%.17g,%d\n",
                  method_name(r.method), design::group_name(r.group), r.analysis,
                  r.theta_hat, r.info, r.z, r.converged ? 1 : 0);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed on '" + path + "'");
}

}  // namespace enrich::fit
