#include "enrich/study/report.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace enrich::study {

namespace {

void fail_io(const std::string& path, const std::string& what) {
  throw std::runtime_error("io error on '" + path + "': " + what);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // LF line endings everywhere
  if (!out) fail_io(path, "cannot open for writing");
  return out;
}

fit::Method method_from_name(const std::string& s) {
  if (s == "cond_score") return fit::Method::cond_score;
  if (s == "cox") return fit::Method::cox;
  if (s == "cox_tvc") return fit::Method::cox_tvc;
  if (s == "rmst") return fit::Method::rmst;
  throw std::runtime_error("unknown method name: " + s);
}

trial::Selection selection_from_name(const std::string& s) {
  if (s == "S1") return trial::Selection::s1;
  if (s == "S2") return trial::Selection::s2;
  if (s == "F") return trial::Selection::full;
  if (s == "none") return trial::Selection::none;
  throw std::runtime_error("unknown selection name: " + s);
}

trial::Decision decision_from_name(const std::string& s) {
  if (s == "reject") return trial::Decision::reject_selected;
  if (s == "accept") return trial::Decision::accept;
  if (s == "futility_stage1") return trial::Decision::futility_stop_stage1;
  if (s == "efficacy_stage1") return trial::Decision::efficacy_stop_stage1;
  throw std::runtime_error("unknown decision name: " + s);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t config_hash(const std::string& canonical_text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : canonical_text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string manifest_line(std::uint64_t seed, std::uint64_t hash) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "# manifest seed=%" PRIu64 " config_hash=%016" PRIx64 " version=1",
                seed, hash);
  return buf;
}

void write_outcomes_csv(const std::string& path, const ScenarioResult& sr,
                        const std::string& manifest) {
  auto out = open_out(path);
  out << manifest << "\n";
  out << "replicate,method,selected,stage,decision,valid,shortfall,"
         "z1_1,z2_1,zF_1,z_sel_2,d1_1,d2_1,dF_1,d_2,cal_1,cal_2,visits\n";
  for (const auto& r : sr.rows) {
    out << r.replicate << ',' << fit::method_name(r.method) << ','
        << trial::selection_name(r.selected) << ',' << r.stage << ','
        << trial::decision_name(r.decision) << ',' << (r.valid ? 1 : 0) << ','
        << (r.shortfall ? 1 : 0) << ',' << format_double(r.z1_1) << ','
        << format_double(r.z2_1) << ',' << format_double(r.zF_1) << ','
        << format_double(r.z_sel_2) << ',' << format_double(r.d1_1) << ','
        << format_double(r.d2_1) << ',' << format_double(r.dF_1) << ','
        << format_double(r.d_2) << ',' << format_double(r.cal_1) << ','
        << format_double(r.cal_2) << ',' << format_double(r.visits) << "\n";
  }
  if (!out) fail_io(path, "write failed");
}

std::vector<OutcomeRow> read_outcomes_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io(path, "cannot open for reading");
  std::vector<OutcomeRow> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // column header
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != 18) fail_io(path, "malformed row: " + line);
    OutcomeRow r;
    r.replicate = std::stol(f[0]);
    r.method = method_from_name(f[1]);
    r.selected = selection_from_name(f[2]);
    r.stage = std::stoi(f[3]);
    r.decision = decision_from_name(f[4]);
    r.valid = f[5] == "1";
    r.shortfall = f[6] == "1";
    r.z1_1 = std::stod(f[7]);
    r.z2_1 = std::stod(f[8]);
    r.zF_1 = std::stod(f[9]);
    r.z_sel_2 = std::stod(f[10]);
    r.d1_1 = std::stod(f[11]);
    r.d2_1 = std::stod(f[12]);
    r.dF_1 = std::stod(f[13]);
    r.d_2 = std::stod(f[14]);
    r.cal_1 = std::stod(f[15]);
    r.cal_2 = std::stod(f[16]);
    r.visits = std::stod(f[17]);
    rows.push_back(r);
  }
  return rows;
}

void write_report_csv(const std::string& path, const StudyResult& result,
                      const std::string& manifest) {
  auto out = open_out(path);
  out << manifest << "\n";
  out << "scenario,method,n_total,n_valid,n_invalid,n_shortfall,"
         "p_select_s1,se_select_s1,p_select_s2,p_select_f,p_select_none,"
         "power_joint,se_power_joint,power_cond,se_power_cond,"
         "reject_any,fwer,se_fwer,invalid_rate,mean_events,mean_calendar,mean_visits\n";
  for (const auto& c : result.report) {
    out << c.scenario << ',' << fit::method_name(c.method) << ',' << c.n_total << ','
        << c.n_valid << ',' << c.n_invalid << ',' << c.n_shortfall << ','
        << format_double(c.p_select[0]) << ',' << format_double(c.se_select[0]) << ','
        << format_double(c.p_select[1]) << ',' << format_double(c.p_select[2]) << ','
        << format_double(c.p_select[3]) << ',' << format_double(c.power_joint) << ','
        << format_double(c.se_power_joint) << ',' << format_double(c.power_cond) << ','
        << format_double(c.se_power_cond) << ',' << format_double(c.reject_any) << ','
        << format_double(c.fwer) << ',' << format_double(c.se_fwer) << ','
        << format_double(c.invalid_rate) << ',' << format_double(c.mean_events) << ','
        << format_double(c.mean_calendar) << ',' << format_double(c.mean_visits) << "\n";
  }
  for (const auto& note : result.notes) out << "# note " << note << "\n";
  if (!out) fail_io(path, "write failed");
}

void write_plotdata_csv(const std::string& path, const StudyResult& result,
                        const std::string& manifest) {
  auto out = open_out(path);
  out << manifest << "\n";
  out << "scenario,method,power,se\n";
  for (const auto& c : result.report) {
    out << c.scenario << ',' << fit::method_name(c.method) << ','
        << format_double(c.power_cond) << ',' << format_double(c.se_power_cond) << "\n";
  }
  if (!out) fail_io(path, "write failed");
}

void write_summary_txt(const std::string& path, const StudyResult& result) {
  auto out = open_out(path);
  out << "scenario            method      n      P(S1)   power   powerC  FWER    invalid\n";
  char buf[160];
  for (const auto& c : result.report) {
    std::snprintf(buf, sizeof(buf), "%-19s %-10s %-6ld %-7.3f %-7.3f %-7.3f %-7.4f %-7.4f\n",
                  c.scenario.c_str(), fit::method_name(c.method), c.n_valid,
                  c.p_select[0], c.power_joint, c.power_cond, c.fwer, c.invalid_rate);
    out << buf;
  }
  if (!out) fail_io(path, "write failed");
}

void write_scan_csv(const std::string& path, const ScanResult& result,
                    const std::string& manifest) {
  auto out = open_out(path);
  out << manifest << "\n";
  out << "theta1,theta2,theta_full,null_s1,null_s2,null_full,n,reject_true,se,"
         "global_null_rate,global_null_se\n";
  for (const auto& c : result.cells) {
    out << format_double(c.theta1) << ',' << format_double(c.theta2) << ','
        << format_double(c.theta_full) << ',' << (c.null_s1 ? 1 : 0) << ','
        << (c.null_s2 ? 1 : 0) << ',' << (c.null_full ? 1 : 0) << ',' << c.n << ','
        << format_double(c.reject_true) << ',' << format_double(c.se) << ','
        << format_double(result.global_null_rate) << ','
        << format_double(result.global_null_se) << "\n";
  }
  if (!out) fail_io(path, "write failed");
}

void write_design_report(const std::string& path, const DesignReport& report,
                         const std::string& manifest) {
  auto out = open_out(path);
  out << manifest << "\n";
  out << "zeta = " << format_double(report.spec.zeta) << "\n";
  out << "info1_req = " << format_double(report.spec.info1_req) << "\n";
  out << "m1 = " << format_double(report.plan.m1) << "\n";
  out << "m2 = " << format_double(report.plan.m2) << "\n";
  out << "mF = " << format_double(report.plan.mF) << "\n";
  out << "d1_stage1 = " << report.plan.d1_stage1 << "\n";
  out << "d_total = " << report.plan.d_total << "\n";
  out << "i_max = " << format_double(report.plan.i_max) << "\n";
  out << "a1 = " << format_double(report.planned_boundaries.a1) << "\n";
  out << "b1 = " << format_double(report.planned_boundaries.b1) << "\n";
  out << "a2 = " << format_double(report.planned_boundaries.a2) << "\n";
  out << "b2 = " << format_double(report.planned_boundaries.b2) << "\n";
  out << "alpha_spend = " << format_double(report.planned_boundaries.alpha1) << ","
      << format_double(report.planned_boundaries.alpha2) << "\n";
  out << "beta_spend = " << format_double(report.planned_boundaries.beta1) << ","
      << format_double(report.planned_boundaries.beta2) << "\n";
  out << "alpha = " << format_double(report.spec.alpha) << "\n";
  out << "beta = " << format_double(report.spec.beta) << "\n";
  out << "psi = " << format_double(report.spec.psi) << "\n";
  out << "delta = " << format_double(report.spec.delta) << "\n";
  out << "lambda = " << format_double(report.spec.lambda) << "\n";
  if (!out) fail_io(path, "write failed");
}

DesignReport read_design_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io(path, "cannot open for reading");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) fail_io(path, "malformed line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  auto need = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) fail_io(path, "missing key: " + key);
    return it->second;
  };
  DesignReport rep;
  rep.spec.zeta = std::stod(need("zeta"));
  rep.spec.info1_req = std::stod(need("info1_req"));
  rep.spec.alpha = std::stod(need("alpha"));
  rep.spec.beta = std::stod(need("beta"));
  rep.spec.psi = std::stod(need("psi"));
  rep.spec.delta = std::stod(need("delta"));
  rep.spec.lambda = std::stod(need("lambda"));
  rep.plan.m1 = std::stod(need("m1"));
  rep.plan.m2 = std::stod(need("m2"));
  rep.plan.mF = std::stod(need("mF"));
  rep.plan.d1_stage1 = std::stol(need("d1_stage1"));
  rep.plan.d_total = std::stol(need("d_total"));
  rep.plan.i_max = std::stod(need("i_max"));
  rep.planned_boundaries.a1 = std::stod(need("a1"));
  rep.planned_boundaries.b1 = std::stod(need("b1"));
  rep.planned_boundaries.a2 = std::stod(need("a2"));
  rep.planned_boundaries.b2 = std::stod(need("b2"));
  const auto d2 = static_cast<double>(rep.plan.d1_stage1);
  rep.plan.d2_stage1 =
      static_cast<long>(std::ceil((1.0 - rep.spec.lambda) / rep.spec.lambda * d2));
  rep.plan.dF_stage1 = static_cast<long>(std::ceil(d2 / rep.spec.lambda));
  return rep;
}

}  // namespace enrich::study
