#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* p = std::getenv("ENRICH_CLI");
  REQUIRE(p != nullptr);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

fs::path sandbox() {
  const auto dir = fs::temp_directory_path() / "enrich_cli_test";
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cli: unknown config keys are rejected with exit code 2") {
  const auto dir = sandbox();
  const auto cfg = dir / "bad.json";
  write_file(cfg, R"({"scenario": {"gamma": 0.8}, "replicates": 2, "frobnicate": 1})");
  CHECK(run("simulate --config " + cfg.string() + " --out " + dir.string()) == 2);

  write_file(cfg, R"({"scenario": {"gamma": 0.8, "bogus_key": 3}, "replicates": 2})");
  CHECK(run("simulate --config " + cfg.string() + " --out " + dir.string()) == 2);

  // missing required scenario key
  write_file(cfg, R"({"replicates": 2})");
  CHECK(run("simulate --config " + cfg.string() + " --out " + dir.string()) == 2);

  // unreadable design report
  write_file(cfg, R"({"scenario": {"gamma": 0.8}, "design_report": "/nonexistent"})");
  CHECK(run("simulate --config " + cfg.string() + " --out " + dir.string()) != 0);
}

TEST_CASE("cli: simulate is deterministic and row counts match") {
  const auto dir = sandbox();
  const auto cfg = dir / "sim.json";
  write_file(cfg, R"({
    "scenario": {"gamma": 0.8, "sigma": 1.0, "phi2": 5.0, "alternative": true,
                 "d1_stage1": 41, "d_total": 180},
    "replicates": 10, "seed": 5, "methods": ["cox", "cox_tvc"]})");
  const auto out1 = dir / "run1";
  const auto out2 = dir / "run2";
  CHECK(run("simulate --config " + cfg.string() + " --out " + out1.string()) == 0);
  CHECK(run("simulate --config " + cfg.string() + " --out " + out2.string()) == 0);
  const auto a = slurp(out1 / "outcomes.csv");
  const auto b = slurp(out2 / "outcomes.csv");
  CHECK(a == b);  // byte-identical reruns
  // 10 replicates x 2 methods + manifest + header
  long lines = std::count(a.begin(), a.end(), '\n');
  CHECK(lines == 22);
}

TEST_CASE("cli: analytic mode matches the design error rate") {
  const auto dir = sandbox();
  const auto cfg = dir / "an.json";
  write_file(cfg, R"({
    "scenario": {"name": "nullcell", "gamma": 0.8, "sigma": 1.0, "phi2": 5.0,
                 "alternative": false, "d1_stage1": 41, "d_total": 191},
    "analytic_z": true, "theta1": 0.0, "theta2": 0.0,
    "replicates": 100000, "seed": 11, "methods": ["cox"]})");
  const auto out = dir / "an";
  CHECK(run("simulate --config " + cfg.string() + " --out " + out.string()) == 0);
  const auto report = slurp(out / "report.csv");
  // reject_any is column 16 (0-based 15); parse the single data row
  std::istringstream ss(report);
  std::string line, data;
  while (std::getline(ss, line))
    if (!line.empty() && line[0] != '#' && line.find("scenario,") != 0) data = line;
  REQUIRE(!data.empty());
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : data + ",") {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else
      cur.push_back(ch);
  }
  const double reject_any = std::stod(fields[15]);
  CHECK(std::abs(reject_any - 0.025) < 3.0 * std::sqrt(0.025 * 0.975 / 100000.0));
}

TEST_CASE("cli: study sharding merges to the monolithic run") {
  const auto dir = sandbox();
  const auto mk = [&](long b, long e, const std::string& name) {
    const auto cfg = dir / (name + ".json");
    std::ostringstream txt;
    txt << R"({"scenarios": [{"name": "cell", "gamma": 0.8, "sigma": 1.0,
                "phi2": 5.0, "alternative": true, "d1_stage1": 41, "d_total": 180}],)"
        << "\"rep_begin\": " << b << ", \"rep_end\": " << e
        << R"(, "seed": 9, "methods": ["cox"]})";
    write_file(cfg, txt.str());
    return cfg;
  };
  const auto whole = mk(0, 20, "whole");
  const auto lo = mk(0, 10, "lo");
  const auto hi = mk(10, 20, "hi");
  CHECK(run("study --config " + whole.string() + " --out " + (dir / "whole").string()) == 0);
  CHECK(run("study --config " + lo.string() + " --out " + (dir / "lo").string()) == 0);
  CHECK(run("study --config " + hi.string() + " --out " + (dir / "hi").string()) == 0);

  const auto merge_cfg = dir / "merge.json";
  write_file(merge_cfg,
             std::string(R"({"inputs": [")") + (dir / "lo" / "outcomes_cell.csv").string() +
                 R"(", ")" + (dir / "hi" / "outcomes_cell.csv").string() +
                 R"("], "scenario": {"gamma": 0.8, "alternative": true}, "name": "cell"})");
  CHECK(run("report --config " + merge_cfg.string() + " --out " + (dir / "merged").string()) == 0);

  // Merged per-trial rows equal the monolithic rows (ignoring manifests).
  auto body = [](const std::string& text) {
    std::istringstream ss(text);
    std::string line, out;
    while (std::getline(ss, line))
      if (!line.empty() && line[0] != '#') out += line + "\n";
    return out;
  };
  CHECK(body(slurp(dir / "merged" / "outcomes_merged.csv")) ==
        body(slurp(dir / "whole" / "outcomes_cell.csv")));

  // Aggregated power cells agree as well.
  auto power_field = [&](const fs::path& p) {
    std::istringstream ss(slurp(p));
    std::string line, data;
    while (std::getline(ss, line))
      if (!line.empty() && line[0] != '#' && line.find("scenario,") != 0) data = line;
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : data + ",") {
      if (ch == ',') {
        fields.push_back(cur);
        cur.clear();
      } else
        cur.push_back(ch);
    }
    return fields;
  };
  const auto f_whole = power_field(dir / "whole" / "report.csv");
  const auto f_merge = power_field(dir / "merged" / "report.csv");
  CHECK(f_whole[11] == f_merge[11]);  // power_joint
  CHECK(f_whole[19] == f_merge[19]);  // mean_events
}

TEST_CASE("cli: calibrate writes a parseable design report") {
  const auto dir = sandbox();
  const auto cfg = dir / "cal.json";
  // Cox-based calibration on a smaller cohort keeps this test quick.
  write_file(cfg, R"({"method": "cox", "calibration_patients": 1200,
                      "calibration_snapshots": 16, "seed": 3,
                      "scenario": {"gamma": 0.8, "sigma": 1.0, "phi2": 5.0}})");
  const auto out = dir / "cal";
  CHECK(run("calibrate --config " + cfg.string() + " --out " + out.string()) == 0);
  const auto text = slurp(out / "design.txt");
  CHECK(text.find("zeta = 0.754") != std::string::npos);
  CHECK(text.find("info1_req = 9.0") != std::string::npos);
  CHECK(text.find("d_total = ") != std::string::npos);
  CHECK(text.find("alpha_spend = ") != std::string::npos);

  // identical rerun produces an identical file
  const auto out2 = dir / "cal2";
  CHECK(run("calibrate --config " + cfg.string() + " --out " + out2.string()) == 0);
  CHECK(slurp(out / "design.txt") == slurp(out2 / "design.txt"));
}

TEST_CASE("cli: fwer-scan produces a scan file with the global-null row") {
  const auto dir = sandbox();
  const auto cfg = dir / "scan.json";
  write_file(cfg, R"({"replicates": 20000, "seed": 21, "d1_stage1": 41,
                      "d_total": 191, "theta_grid": [[0.0, 0.0], [-0.3, 0.4]]})");
  const auto out = dir / "scan";
  CHECK(run("fwer-scan --config " + cfg.string() + " --out " + out.string()) == 0);
  const auto text = slurp(out / "fwer_scan.csv");
  CHECK(text.find("theta1,theta2") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);  // manifest+header+2 rows
}

TEST_CASE("cli: numeric failures exit with code 3") {
  const auto dir = sandbox();
  const auto cfg = dir / "numfail.json";
  // psi below the feasible range: the threshold calibration cannot find a
  // solution with nonnegative information.
  write_file(cfg, R"({"psi": 0.2, "delta": 0.5, "calibration_patients": 200})");
  CHECK(run("calibrate --config " + cfg.string() + " --out " + dir.string()) == 3);
}
