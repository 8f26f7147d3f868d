#include "escape/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace escape {

double Proportion::stderr_() const {
  if (n == 0) return 0.0;
  const double p = freq();
  return std::sqrt(p * (1 - p) / double(n));
}

double Proportion::lo95() const { return std::max(0.0, freq() - 1.959963984540054 * stderr_()); }
double Proportion::hi95() const { return std::min(1.0, freq() + 1.959963984540054 * stderr_()); }

double z_score(long count, long n, double p) {
  if (n <= 0) return 0.0;
  const double obs = double(count) / double(n);
  const double var = p * (1 - p) / double(n);
  if (var <= 0) {
    if (obs == p) return 0.0;
    return obs > p ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
  return (obs - p) / std::sqrt(var);
}

double mean_z(const std::vector<double>& xs, double target) {
  const double n = double(xs.size());
  if (xs.size() < 2) return 0.0;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double se = std::sqrt(ss / (n - 1) / n);
  return se > 0 ? (mean - target) / se : 0.0;
}

double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0, sign = 1;
  for (int j = 1; j <= 200; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {
double ks_p(double d, double ne) {
  const double sq = std::sqrt(ne);
  return kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
}
}  // namespace

TestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = double(a.size()), nb = double(b.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / na - double(j) / nb));
  }
  TestResult r;
  r.statistic = d;
  r.p_value = ks_p(d, na * nb / (na + nb));
  return r;
}

TestResult ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf) {
  if (xs.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = double(xs.size());
  double d = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = cdf(xs[i]);
    d = std::max({d, double(i + 1) / n - F, F - double(i) / n});
  }
  TestResult r;
  r.statistic = d;
  r.p_value = ks_p(d, n);
  return r;
}

namespace {
double chi2_sf(double x, int dof) {
  if (dof <= 0) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, std::max(0.0, x)));
}
}  // namespace

TestResult chi2_homogeneity(const std::map<std::string, long>& a, const std::map<std::string, long>& b,
                            double min_expected) {
  long na = 0, nb = 0;
  for (auto& [k, c] : a) na += c;
  for (auto& [k, c] : b) nb += c;
  if (na == 0 || nb == 0) throw std::invalid_argument("chi2_homogeneity: empty sample");
  std::map<std::string, std::pair<long, long>> cells;
  for (auto& [k, c] : a) cells[k].first += c;
  for (auto& [k, c] : b) cells[k].second += c;
  const double N = double(na + nb);
  std::vector<std::pair<long, long>> kept;
  std::pair<long, long> rest{0, 0};
  for (auto& [k, c] : cells) {
    const double tot = double(c.first + c.second);
    if (tot * std::min(na, nb) / N < min_expected) {
      rest.first += c.first;
      rest.second += c.second;
    } else {
      kept.push_back(c);
    }
  }
  if (rest.first + rest.second > 0) {
    const double tot = double(rest.first + rest.second);
    if (tot * std::min(na, nb) / N >= min_expected || kept.empty()) {
      kept.push_back(rest);
    } else {
      // too small even when pooled: fold into the smallest kept cell
      auto it = std::min_element(kept.begin(), kept.end(), [](auto& x, auto& y) {
        return x.first + x.second < y.first + y.second;
      });
      it->first += rest.first;
      it->second += rest.second;
    }
  }
  double x2 = 0;
  for (auto& c : kept) {
    const double tot = double(c.first + c.second);
    const double ea = tot * na / N, eb = tot * nb / N;
    x2 += (c.first - ea) * (c.first - ea) / ea + (c.second - eb) * (c.second - eb) / eb;
  }
  TestResult r;
  r.statistic = x2;
  r.dof = int(kept.size()) - 1;
  r.p_value = chi2_sf(x2, r.dof);
  return r;
}

TestResult chi2_gof(const std::vector<long>& observed, const std::vector<double>& probs, double min_expected) {
  if (observed.size() != probs.size()) throw std::invalid_argument("chi2_gof: size mismatch");
  const long n = std::accumulate(observed.begin(), observed.end(), 0L);
  std::vector<std::pair<double, double>> kept;  // observed, expected
  std::pair<double, double> rest{0, 0};
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = probs[i] * n;
    if (e < min_expected)
      rest = {rest.first + observed[i], rest.second + e};
    else
      kept.push_back({double(observed[i]), e});
  }
  if (rest.second > 0 || rest.first > 0) {
    if (rest.second >= min_expected || kept.empty()) {
      kept.push_back(rest);
    } else {
      auto it = std::min_element(kept.begin(), kept.end(), [](auto& x, auto& y) { return x.second < y.second; });
      it->first += rest.first;
      it->second += rest.second;
    }
  }
  double x2 = 0;
  for (auto& [o, e] : kept)
    if (e > 0) x2 += (o - e) * (o - e) / e;
  TestResult r;
  r.statistic = x2;
  r.dof = int(kept.size()) - 1;
  r.p_value = chi2_sf(x2, r.dof);
  return r;
}

}  // namespace escape
