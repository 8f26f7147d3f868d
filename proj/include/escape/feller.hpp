#pragma once

#include <vector>

#include "escape/rng.hpp"

namespace escape {

// The critical Feller diffusion dw = sqrt(w) dB, absorbed at 0.

struct FellerSample {
  double value = 0;
  bool absorbed = false;
  double duration = 0;
  double w0 = 0;
};

// exp(-2 w0 / t). Throws std::domain_error for t <= 0 or w0 < 0.
double absorption_prob(double w0, double t);

// Exact draw of w(t) given w(0) = w0: N ~ Poisson(2 w0 / t), value 0 when
// N = 0, otherwise Gamma(shape N, scale t/2).
FellerSample sample_transition(double w0, double t, Rng& rng);

// Truncated Euler-Maruyama with step dt; absorbed as soon as w <= 0.
// Only used as an independent oracle for the exact sampler.
FellerSample sample_em(double w0, double t, double dt, Rng& rng);

// CDF of w(t) restricted to the surviving paths, P(w(t) <= x | w(t) > 0).
double conditional_cdf(double w0, double t, double x);

enum class PathMethod { EulerMaruyama, ExactGrid };

struct PathIntegralOptions {
  int steps = 10000;
  bool noise = true;  // false freezes w at w0 (test hook)
  PathMethod method = PathMethod::EulerMaruyama;
  double floor = 1e-300;
  // EM only: each increment is built from this many unit normals, so a run
  // with (steps, 2) sees the same Brownian path as (2 steps, 1) on one stream.
  int brownian_substeps = 1;
};

struct PathIntegral {
  bool absorbed = false;
  bool resolution_failed = false;  // w sank below the floor twice without absorbing
  double value = 0;                // integral over s in [0, s_max] of 1 / w(a s)
  double terminal = 0;             // w(a s_max)
  int steps_used = 0;
};

// One path of w on [0, a*s_max]; returns the trapezoidal integral of 1/w[a s]
// over s, or the absorbed flag when the path reaches 0.
PathIntegral sample_path_integral(double w0, double s_max, double a, Rng& rng,
                                  const PathIntegralOptions& opt = {});

}  // namespace escape
