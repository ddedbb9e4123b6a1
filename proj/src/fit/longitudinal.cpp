#include "enrich/fit/longitudinal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace enrich::fit {

std::optional<HistoryFit> ols_history(const std::vector<double>& visit_times,
                                      const std::vector<double>& values, double u) {
  SubjectHistory h(visit_times, values);
  return h.at(u);
}

std::optional<FullLineFit> fit_full_line(const std::vector<double>& visit_times,
                                         const std::vector<double>& values) {
  const int m = static_cast<int>(visit_times.size());
  if (m < 2) return std::nullopt;
  double st = 0, st2 = 0, sw = 0, stw = 0, sw2 = 0;
  for (int i = 0; i < m; ++i) {
    st += visit_times[i];
    st2 += visit_times[i] * visit_times[i];
    sw += values[i];
    stw += visit_times[i] * values[i];
    sw2 += values[i] * values[i];
  }
  const double svv = st2 - st * st / m;
  if (svv <= 0.0) return std::nullopt;
  FullLineFit f;
  f.m = m;
  f.slope = (stw - st * sw / m) / svv;
  f.intercept = (sw - f.slope * st) / m;
  // RSS via the shortcut Syy - b * Sxy.
  const double syy = sw2 - sw * sw / m;
  const double sxy = stw - st * sw / m;
  f.rss = std::max(0.0, syy - f.slope * sxy);
  return f;
}

SubjectHistory::SubjectHistory(const std::vector<double>& visit_times,
                               const std::vector<double>& values)
    : times_(visit_times) {
  const size_t m = times_.size();
  cum_t_.resize(m);
  cum_t2_.resize(m);
  cum_w_.resize(m);
  cum_tw_.resize(m);
  double t = 0, t2 = 0, w = 0, tw = 0;
  for (size_t i = 0; i < m; ++i) {
    t += times_[i];
    t2 += times_[i] * times_[i];
    w += values[i];
    tw += times_[i] * values[i];
    cum_t_[i] = t;
    cum_t2_[i] = t2;
    cum_w_[i] = w;
    cum_tw_[i] = tw;
  }
}

int SubjectHistory::count_at(double u) const {
  return static_cast<int>(std::upper_bound(times_.begin(), times_.end(), u + 1e-12) -
                          times_.begin());
}

double SubjectHistory::second_visit_time() const {
  if (times_.size() < 2) return std::numeric_limits<double>::infinity();
  return times_[1];
}

std::optional<HistoryFit> SubjectHistory::at(double u) const {
  const int m = count_at(u);
  if (m < 2) return std::nullopt;
  const double st = cum_t_[m - 1];
  const double st2 = cum_t2_[m - 1];
  const double sw = cum_w_[m - 1];
  const double stw = cum_tw_[m - 1];
  const double vbar = st / m;
  const double svv = st2 - st * vbar;
  if (svv <= 0.0) return std::nullopt;
  const double slope = (stw - sw * vbar) / svv;
  const double intercept = (sw - slope * st) / m;
  HistoryFit f;
  f.n_obs = m;
  f.x_hat = intercept + slope * u;
  f.psi = 1.0 / m + (u - vbar) * (u - vbar) / svv;
  return f;
}

}  // namespace enrich::fit
