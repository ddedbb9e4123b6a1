#pragma once

#include <optional>
#include <vector>

namespace enrich::fit {

// History-limited least squares for one subject: straight line fitted to the
// measurements taken at or before u, evaluated at u. psi is the prediction
// variance factor 1/m + (u - vbar)^2 / S_vv (the sigma^2 multiplier).
struct HistoryFit {
  double x_hat = 0.0;
  double psi = 0.0;
  int n_obs = 0;
};

std::optional<HistoryFit> ols_history(const std::vector<double>& visit_times,
                                      const std::vector<double>& values, double u);

// Residual sum of squares of the line fitted to all m observations; defined
// for m >= 2 (zero residuals at m == 2).
struct FullLineFit {
  double rss = 0.0;
  double intercept = 0.0;
  double slope = 0.0;
  int m = 0;
};

std::optional<FullLineFit> fit_full_line(const std::vector<double>& visit_times,
                                         const std::vector<double>& values);

// Prefix-sum view over one subject's visits supporting O(log m) history
// fits at arbitrary times; shared by the conditional-score machinery.
class SubjectHistory {
 public:
  SubjectHistory() = default;
  SubjectHistory(const std::vector<double>& visit_times,
                 const std::vector<double>& values);

  // Number of visits at or before u.
  int count_at(double u) const;
  // History fit using the visits at or before u; nullopt below 2 visits.
  std::optional<HistoryFit> at(double u) const;
  double second_visit_time() const;  // +inf when fewer than 2 visits
  int total_visits() const { return static_cast<int>(times_.size()); }

 private:
  std::vector<double> times_;
  std::vector<double> cum_t_, cum_t2_, cum_w_, cum_tw_;
};

}  // namespace enrich::fit
