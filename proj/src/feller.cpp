#include "escape/feller.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace escape {

double absorption_prob(double w0, double t) {
  if (!(t > 0)) throw std::domain_error("absorption_prob: t must be > 0");
  if (!(w0 >= 0)) throw std::domain_error("absorption_prob: w0 must be >= 0");
  return std::exp(-2.0 * w0 / t);
}

FellerSample sample_transition(double w0, double t, Rng& rng) {
  if (!(w0 >= 0) || !(t >= 0)) throw std::domain_error("sample_transition: need w0 >= 0, t >= 0");
  FellerSample s;
  s.w0 = w0;
  s.duration = t;
  if (w0 == 0) {
    s.absorbed = true;
    return s;
  }
  if (t == 0) {
    s.value = w0;
    return s;
  }
  std::poisson_distribution<long long> pois(2.0 * w0 / t);
  const long long n = pois(rng);
  if (n == 0) {
    s.absorbed = true;
    return s;
  }
  std::gamma_distribution<double> gam(double(n), t / 2.0);
  s.value = gam(rng);
  if (s.value <= 0) s.value = std::numeric_limits<double>::min();
  return s;
}

FellerSample sample_em(double w0, double t, double dt, Rng& rng) {
  FellerSample s;
  s.w0 = w0;
  s.duration = t;
  std::normal_distribution<double> z;
  const long n = std::max(1L, std::lround(t / dt));
  const double h = t / double(n);
  const double sq = std::sqrt(h);
  double w = w0;
  for (long i = 0; i < n && w > 0; ++i) w += std::sqrt(w) * sq * z(rng);
  if (w <= 0) {
    s.absorbed = true;
    s.value = 0;
  } else {
    s.value = w;
  }
  return s;
}

double conditional_cdf(double w0, double t, double x) {
  if (x <= 0) return 0.0;
  const double mu = 2.0 * w0 / t;
  const double p0 = std::exp(-mu);
  // sum over the Poisson count; terms are negligible once the pmf has decayed
  double sum = 0, logpmf = -mu;
  const long nmax = long(mu + 40.0 * std::sqrt(mu + 1.0) + 50.0);
  for (long n = 1; n <= nmax; ++n) {
    logpmf += std::log(mu) - std::log(double(n));
    sum += std::exp(logpmf) * boost::math::gamma_p(double(n), x / (t / 2.0));
  }
  return sum / (1.0 - p0);
}

namespace {

PathIntegral run_path(double w0, double s_max, double a, Rng& rng, const PathIntegralOptions& opt, int steps,
                      bool& floor_hit) {
  PathIntegral r;
  r.steps_used = steps;
  floor_hit = false;
  const double T = a * s_max;
  const double h = T / steps;
  const double sq = std::sqrt(h);
  std::normal_distribution<double> z;
  double w = w0;
  double integral_tau = 0;
  for (int i = 0; i < steps; ++i) {
    double next = w;
    if (opt.noise) {
      if (opt.method == PathMethod::EulerMaruyama) {
        double dz = 0;
        for (int j = 0; j < opt.brownian_substeps; ++j) dz += z(rng);
        next = w + std::sqrt(w) * sq * dz / std::sqrt(double(opt.brownian_substeps));
      } else {
        auto s = sample_transition(w, h, rng);
        next = s.absorbed ? 0.0 : s.value;
      }
    }
    if (next <= 0) {
      r.absorbed = true;
      r.terminal = 0;
      return r;
    }
    if (next < opt.floor) {
      floor_hit = true;
      return r;
    }
    integral_tau += 0.5 * h * (1.0 / w + 1.0 / next);
    w = next;
  }
  r.value = integral_tau / a;
  r.terminal = w;
  return r;
}

}  // namespace

PathIntegral sample_path_integral(double w0, double s_max, double a, Rng& rng, const PathIntegralOptions& opt) {
  if (!(w0 > 0) || !(s_max > 0) || !(a > 0))
    throw std::domain_error("sample_path_integral: need w0, s_max, a > 0");
  if (opt.steps < 1) throw std::domain_error("sample_path_integral: steps must be >= 1");
  if (opt.brownian_substeps < 1) throw std::domain_error("sample_path_integral: brownian_substeps must be >= 1");
  bool floor_hit = false;
  PathIntegral r = run_path(w0, s_max, a, rng, opt, opt.steps, floor_hit);
  if (!floor_hit) return r;
  r = run_path(w0, s_max, a, rng, opt, 2 * opt.steps, floor_hit);
  if (floor_hit) {
    r.resolution_failed = true;
    r.value = 0;
  }
  return r;
}

}  // namespace escape
