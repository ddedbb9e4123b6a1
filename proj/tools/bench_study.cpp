// Benchmark comparing the serial reference study loop with the
// OpenMP-parallel path on a small scenario grid.

#include <chrono>
#include <cstdio>

#include "enrich/design/selection.hpp"
#include "enrich/study/study.hpp"

using namespace enrich;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  long reps = argc > 1 ? std::atol(argv[1]) : 200;
  int jobs = argc > 2 ? std::atoi(argv[2]) : 0;

  design::DesignSpec spec;
  const auto cal = design::calibrate_threshold(spec.psi, spec.delta);
  spec.zeta = cal.zeta;
  spec.info1_req = cal.info1_req;

  study::StudyConfig cfg;
  cfg.scenarios.push_back(study::make_scenario(
      "bench", 0.8, 1.0, 5.0, true, study::design_from_event_targets(spec, 49, 215)));
  cfg.methods = {fit::Method::cond_score, fit::Method::cox};
  cfg.rep_begin = 0;
  cfg.rep_end = reps;
  cfg.seed = 7;

  auto t0 = Clock::now();
  const auto serial = study::run_study_serial(cfg);
  const double ts = seconds_since(t0);

  cfg.jobs = jobs;
  t0 = Clock::now();
  const auto parallel = study::run_study(cfg);
  const double tp = seconds_since(t0);

  bool identical = serial.scenarios[0].rows.size() == parallel.scenarios[0].rows.size();
  if (identical) {
    for (size_t i = 0; i < serial.scenarios[0].rows.size(); ++i) {
      const auto& a = serial.scenarios[0].rows[i];
      const auto& b = parallel.scenarios[0].rows[i];
      identical = identical && a.z1_1 == b.z1_1 && a.decision == b.decision &&
                  a.cal_2 == b.cal_2;
    }
  }
  std::printf("replicates: %ld\n", reps);
  std::printf("serial:   %.3f s  (%.2f ms/replicate)\n", ts, 1e3 * ts / reps);
  std::printf("parallel: %.3f s  (%.2f ms/replicate, jobs=%d)\n", tp,
              1e3 * tp / reps, jobs);
  std::printf("speedup:  %.2fx, outputs %s\n", ts / tp,
              identical ? "identical" : "DIFFER");
  return identical ? 0 : 1;
}
