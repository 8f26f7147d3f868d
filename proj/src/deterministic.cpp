#include "escape/deterministic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "escape/roots.hpp"

namespace escape {

namespace {

using Vec = std::array<double, 3>;

struct Rhs {
  const ModelParams& mp;
  bool v_zero, vstar_zero;
  Vec operator()(const Vec& y) const {
    const double v = v_zero ? 0.0 : std::exp(y[0]);
    const double vs = vstar_zero ? 0.0 : std::exp(y[1]);
    const double p = y[2];
    return {v_zero ? 0.0 : 1 - p - v - vs, vstar_zero ? 0.0 : mp.f - v - vs, mp.epsilon * p * (v - mp.alpha * p)};
  }
};

Vec axpy(const Vec& y, double h, std::initializer_list<std::pair<double, const Vec*>> terms) {
  Vec r = y;
  for (auto& [c, k] : terms)
    for (int i = 0; i < 3; ++i) r[i] += h * c * (*k)[i];
  return r;
}

SystemState to_state(const Vec& y, double t, bool vz, bool vsz) {
  return {vz ? 0.0 : std::exp(y[0]), vsz ? 0.0 : std::exp(y[1]), y[2], t};
}

double hermite(double s, double h, double y0, double d0, double y1, double d1) {
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * d1;
}

}  // namespace

std::array<double, 3> OdeTrajectory::y_at(double t) const {
  if (times.empty()) throw std::logic_error("OdeTrajectory::y_at: empty trajectory");
  if (t <= times.front()) return y.front();
  if (t >= times.back()) return y.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t i = std::size_t(it - times.begin()) - 1;
  const double h = times[i + 1] - times[i];
  const double s = (t - times[i]) / h;
  Vec r;
  for (int c = 0; c < 3; ++c) r[c] = hermite(s, h, y[i][c], dy[i][c], y[i + 1][c], dy[i + 1][c]);
  return r;
}

SystemState OdeTrajectory::at(double t) const { return to_state(y_at(t), t, v_zero, vstar_zero); }

OdeTrajectory integrate_ode(const ModelParams& mp, const SystemState& u0, double t_end, double tol,
                            const OdeOptions& opt) {
  if (!(u0.v >= 0 && u0.vstar >= 0 && u0.p >= 0)) throw std::invalid_argument("integrate_ode: negative initial state");
  if (!(t_end > u0.t)) throw std::invalid_argument("integrate_ode: t_end must exceed the start time");
  if (!(tol > 1e-14 && tol < 1e-2)) throw std::invalid_argument("integrate_ode: tol must lie in (1e-14, 1e-2)");

  OdeTrajectory tr;
  tr.v_zero = u0.v == 0;
  tr.vstar_zero = u0.vstar == 0;
  std::ostringstream pol;
  pol << "dopri5 per-unit-step tol=" << tol;
  tr.dt_policy = pol.str();
  Rhs rhs{mp, tr.v_zero, tr.vstar_zero};

  Vec y = {tr.v_zero ? 0.0 : std::log(u0.v), tr.vstar_zero ? 0.0 : std::log(u0.vstar), u0.p};
  double t = u0.t;
  Vec k1 = rhs(y);
  tr.times.push_back(t);
  tr.y.push_back(y);
  tr.dy.push_back(k1);
  tr.states.push_back(u0);

  double h = std::min(opt.h0, t_end - t);
  long steps = 0;
  while (t < t_end) {
    if (++steps > opt.max_steps) throw std::runtime_error("integrate_ode: step budget exhausted at t=" + std::to_string(t));
    bool last = false;
    if (t + h >= t_end) {
      h = t_end - t;
      last = true;
    }
    const Vec k2 = rhs(axpy(y, h, {{1.0 / 5, &k1}}));
    const Vec k3 = rhs(axpy(y, h, {{3.0 / 40, &k1}, {9.0 / 40, &k2}}));
    const Vec k4 = rhs(axpy(y, h, {{44.0 / 45, &k1}, {-56.0 / 15, &k2}, {32.0 / 9, &k3}}));
    const Vec k5 = rhs(axpy(y, h, {{19372.0 / 6561, &k1}, {-25360.0 / 2187, &k2}, {64448.0 / 6561, &k3}, {-212.0 / 729, &k4}}));
    const Vec k6 = rhs(axpy(y, h,
                            {{9017.0 / 3168, &k1}, {-355.0 / 33, &k2}, {46732.0 / 5247, &k3}, {49.0 / 176, &k4},
                             {-5103.0 / 18656, &k5}}));
    const Vec yn = axpy(y, h,
                        {{35.0 / 384, &k1}, {500.0 / 1113, &k3}, {125.0 / 192, &k4}, {-2187.0 / 6784, &k5},
                         {11.0 / 84, &k6}});
    const Vec k7 = rhs(yn);
    double err = 0;  // local error per unit step
    for (int i = 0; i < 3; ++i) {
      const double e = 71.0 / 57600 * k1[i] - 71.0 / 16695 * k3[i] + 71.0 / 1920 * k4[i] -
                       17253.0 / 339200 * k5[i] + 22.0 / 525 * k6[i] - 1.0 / 40 * k7[i];
      err = std::max(err, std::abs(e));
    }
    bool finite = std::isfinite(err);
    for (double c : yn) finite = finite && std::isfinite(c);
    if (finite && err <= tol) {
      t = last ? t_end : t + h;
      y = yn;
      if (y[2] < 0) y[2] = 0;  // p is a product of p with a bounded rate; only rounding can push it below 0
      k1 = k7;
      tr.times.push_back(t);
      tr.y.push_back(y);
      tr.dy.push_back(k1);
      tr.states.push_back(to_state(y, t, tr.v_zero, tr.vstar_zero));
      if (last) break;
    }
    const double fac = finite ? (err > 0 ? 0.9 * std::pow(tol / err, 0.25) : 5.0) : 0.2;
    h *= std::clamp(fac, 0.2, 5.0);
    h = std::min(h, opt.hmax);
    if (h < 1e-14 * std::max(1.0, std::abs(t))) {
      std::ostringstream m;
      m << "integrate_ode: step size underflow (stiffness) at t=" << t;
      throw std::runtime_error(m.str());
    }
  }
  return tr;
}

// ---------------------------------------------------------------------------
// stage detection

namespace {

struct Crossing {
  double t;
  int dir;  // +1 upward, -1 downward
};

struct CrossingScan {
  std::vector<Crossing> v, vs;
  bool ambiguous = false;
  std::vector<std::string> notes;
};

constexpr double kGrazeTol = 1e-3;  // in log units, i.e. relative 1e-3 of the threshold

void scan_component(const OdeTrajectory& tr, int c, double L, std::vector<Crossing>& out, CrossingScan& sc) {
  const int sub = 8;
  for (std::size_t i = 0; i + 1 < tr.size(); ++i) {
    const double t0 = tr.times[i], h = tr.times[i + 1] - t0;
    const double y0 = tr.y[i][c], d0 = tr.dy[i][c], y1 = tr.y[i + 1][c], d1 = tr.dy[i + 1][c];
    auto g = [&](double s) { return hermite(s, h, y0, d0, y1, d1) - L; };
    // quick reject: the cubic cannot reach L when both ends are far and slopes small
    const double span = std::abs(d0) * h + std::abs(d1) * h;
    if (std::min(std::abs(y0 - L), std::abs(y1 - L)) > span + 1.0 && (y0 - L) * (y1 - L) > 0) continue;
    double sp = 0, gp = g(0);
    bool crossed = false;
    double gmin = std::abs(gp);
    for (int k = 1; k <= sub; ++k) {
      const double s = double(k) / sub;
      const double gs = g(s);
      gmin = std::min(gmin, std::abs(gs));
      if (gp != 0 && (gp < 0) != (gs < 0)) {
        const double r = bisect(g, sp, s, "detect_stages");
        out.push_back({t0 + r * h, gs > gp ? +1 : -1});
        crossed = true;
      }
      sp = s;
      gp = gs;
    }
    if (!crossed && gmin < kGrazeTol) {
      sc.ambiguous = true;
      std::ostringstream m;
      m << "component " << c << " grazes the threshold near t=" << t0;
      sc.notes.push_back(m.str());
    }
  }
}

StageDetection assemble(const CrossingScan& sc, double t_start, bool vstar_starts_below, bool vstar_absent,
                        double threshold) {
  StageDetection det;
  det.ambiguous = sc.ambiguous;
  det.notes = sc.notes;
  if (vstar_absent) return det;
  auto next = [](const std::vector<Crossing>& xs, double after, int dir) {
    for (const auto& x : xs)
      if (x.t > after && x.dir == dir) return x.t;
    return kNaN;
  };
  double T_s = t_start;
  if (vstar_starts_below) {
    T_s = next(sc.vs, t_start, +1);
    if (std::isnan(T_s)) return det;
  }
  for (int cycle = 0;; ++cycle) {
    StageTimes st;
    st.cycle = cycle;
    st.threshold = threshold;
    st.T_s = T_s;
    st.T_I = next(sc.v, T_s, -1);
    if (std::isnan(st.T_I)) break;
    st.T_II = next(sc.v, st.T_I, +1);
    if (!std::isnan(st.T_II)) st.T_III = next(sc.vs, st.T_II, -1);
    if (!std::isnan(st.T_III)) st.T_IV = next(sc.vs, st.T_III, +1);
    st.complete = !std::isnan(st.T_IV);
    det.cycles.push_back(st);
    if (!st.complete) break;
    T_s = st.T_IV;
  }
  return det;
}

}  // namespace

std::size_t StageDetection::complete_cycles() const {
  return std::size_t(std::count_if(cycles.begin(), cycles.end(), [](const StageTimes& s) { return s.complete; }));
}

StageDetection detect_stages(const OdeTrajectory& tr, const ModelParams& mp) {
  if (tr.size() < 2) throw std::invalid_argument("detect_stages: trajectory has fewer than two points");
  const double L = std::log(mp.threshold());
  CrossingScan sc;
  if (!tr.v_zero) scan_component(tr, 0, L, sc.v, sc);
  if (!tr.vstar_zero) scan_component(tr, 1, L, sc.vs, sc);
  return assemble(sc, tr.times.front(), !tr.vstar_zero && tr.y.front()[1] < L, tr.vstar_zero || tr.v_zero,
                  mp.threshold());
}

StageDetection detect_stages_sampled(const std::vector<double>& t, const std::vector<SystemState>& s,
                                     const ModelParams& mp) {
  if (t.size() != s.size() || t.size() < 2) throw std::invalid_argument("detect_stages_sampled: bad path");
  const double L = std::log(mp.threshold());
  CrossingScan sc;
  auto scan = [&](auto get, std::vector<Crossing>& out) {
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      const double a = get(s[i]), b = get(s[i + 1]);
      if (a <= 0 || b <= 0) break;  // absorbed
      const double la = std::log(a) - L, lb = std::log(b) - L;
      if (la != 0 && (la < 0) != (lb < 0)) {
        const double r = la / (la - lb);
        out.push_back({t[i] + r * (t[i + 1] - t[i]), lb > la ? +1 : -1});
      }
    }
  };
  scan([](const SystemState& x) { return x.v; }, sc.v);
  scan([](const SystemState& x) { return x.vstar; }, sc.vs);
  const bool absent = s.front().vstar <= 0 || s.front().v <= 0;
  return assemble(sc, t.front(), !absent && std::log(s.front().vstar) < L, absent, mp.threshold());
}

// ---------------------------------------------------------------------------
// stage predictors

double solve_H_II(double alpha, double f, double p) {
  if (!(p > 1 - f)) throw std::domain_error("predict_stage_II: needs p(T_I) > 1-f (Stage II degenerate otherwise)");
  return positive_root([&](double H) { return std::log1p(alpha * p * H) / alpha - (1 - f) * H; }, "solve_H_II");
}

double solve_H_IV(double alpha, double f, double p) {
  if (!(p < 1 - f) || !(p > 0))
    throw std::domain_error("predict_stage_IV: needs 0 < p(T_III) < 1-f (Stage IV degenerate otherwise)");
  const double c = (1 + alpha) * p;
  auto rhs = [&](double H) {
    // log(1 + c (e^H - 1)) without overflow for large H
    return H < 1 ? std::log1p(c * std::expm1(H)) : H + std::log(c + (1 - c) * std::exp(-H));
  };
  return positive_root([&](double H) { return rhs(H) / (1 + alpha) - (1 - f) * H; }, "solve_H_IV");
}

namespace {

// Fast prey relaxation on the line where both prey share one total density
// N = (1-p)(1-s) + f s, s = vstar/(v+vstar). log(vstar/v) then moves at
// exactly delta(t) = p(t) - (1-f), and only p(t) needs a model.
struct Reduced {
  double v, vs;
};
Reduced reduced(double rho, double p, double f) {
  const double s = 1 / (1 + std::exp(-rho));
  const double N = (1 - p) * (1 - s) + f * s;
  return {N * (1 - s), N * s};
}

StagePrediction fast_stage(Stage stage, double p, double delta, double rho0, const ModelParams& mp) {
  const double a = mp.alpha, f = mp.f, eps = mp.epsilon, q = mp.q;
  const double le = std::abs(std::log(eps));
  const double ad = std::abs(delta);
  StagePrediction r;
  r.stage = stage;
  const double d1 = p * (1 - (2 + a) * p);
  const double d2 = p * (1 - (1 + a) * p) * std::log(f) - a * p * p * std::log(1 - p);
  r.p_end = p + q * eps * le / ad * d1 + eps / ad * d2;
  const std::string tag = stage == Stage::I ? "I" : "III";
  r.aux["dp_" + tag + "_1"] = d1;
  r.aux["dp_" + tag + "_2"] = d2;
  r.aux["delta"] = delta;
  r.aux["duration_leading"] = 2 * q * le / ad;

  // duration: integrate (rho, p) until the leaving type reaches eps^q
  const double L = q * std::log(eps);
  auto gap = [&](double rho, double pp) {
    const Reduced x = reduced(rho, pp, f);
    return std::log(stage == Stage::I ? x.v : x.vs) - L;
  };
  auto rhs = [&](double, double pp, double rho) {
    const Reduced x = reduced(rho, pp, f);
    return std::array<double, 2>{pp - (1 - f), eps * pp * (x.v - a * pp)};
  };
  const double h = 0.05;
  double t = 0, rho = rho0, pp = p, g = gap(rho, pp);
  const double t_max = 1e3 * (2 * q * le + 10) / ad;
  while (g > 0) {
    const auto k1 = rhs(t, pp, rho);
    const auto k2 = rhs(t, pp + 0.5 * h * k1[1], rho + 0.5 * h * k1[0]);
    const auto k3 = rhs(t, pp + 0.5 * h * k2[1], rho + 0.5 * h * k2[0]);
    const auto k4 = rhs(t, pp + h * k3[1], rho + h * k3[0]);
    const double rn = rho + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
    const double pn = pp + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
    const double gn = gap(rn, pn);
    if (gn <= 0) {
      const double w = g / (g - gn);
      r.duration = t + w * h;
      r.aux["p_end_reduced"] = pp + w * (pn - pp);
      r.aux["threshold_reached"] = 1;
      return r;
    }
    t += h;
    rho = rn;
    pp = pn;
    g = gn;
    if (t > t_max || (stage == Stage::I ? pp <= 1 - f : pp >= 1 - f)) {
      // delta changed sign first: the leaving type turns around above eps^q
      r.duration = std::numeric_limits<double>::infinity();
      r.aux["p_end_reduced"] = pp;
      r.aux["threshold_reached"] = 0;
      return r;
    }
  }
  r.duration = 0;
  r.aux["p_end_reduced"] = p;
  r.aux["threshold_reached"] = 1;
  return r;
}

}  // namespace

StagePrediction predict_stage_I(double p_Ts, const ModelParams& mp, std::optional<double> log_ratio) {
  const double delta = p_Ts - (1 - mp.f);
  if (!(delta > 0)) throw std::domain_error("predict_stage_I: needs delta = p(T_s) - (1-f) > 0");
  if (!(p_Ts < 1)) throw std::domain_error("predict_stage_I: needs p(T_s) < 1");
  const double rho0 = log_ratio ? *log_ratio : mp.q * std::log(mp.epsilon) - std::log(1 - p_Ts);
  return fast_stage(Stage::I, p_Ts, delta, rho0, mp);
}

StagePrediction predict_stage_III(double p_TII, const ModelParams& mp, std::optional<double> log_ratio) {
  const double delta = p_TII - (1 - mp.f);
  if (!(delta < 0)) throw std::domain_error("predict_stage_III: needs delta = p(T_II) - (1-f) < 0");
  if (!(p_TII > 0)) throw std::domain_error("predict_stage_III: needs p(T_II) > 0");
  const double rho0 = log_ratio ? *log_ratio : std::log(mp.f) - mp.q * std::log(mp.epsilon);
  return fast_stage(Stage::III, p_TII, delta, rho0, mp);
}

StagePrediction predict_stage_II(double p_TI, const ModelParams& mp) {
  const double H = solve_H_II(mp.alpha, mp.f, p_TI);
  StagePrediction r;
  r.stage = Stage::II;
  r.duration = H / mp.epsilon;
  r.p_end = p_TI / (1 + mp.alpha * p_TI * H);
  r.aux["H_II"] = H;
  r.aux["residual"] = (1 - mp.f) * H - std::log1p(mp.alpha * p_TI * H) / mp.alpha;
  return r;
}

StagePrediction predict_stage_IV(double p_TIII, const ModelParams& mp) {
  const double a = mp.alpha, f = mp.f, eps = mp.epsilon;
  const double H = solve_H_IV(a, f, p_TIII);
  StagePrediction r;
  r.stage = Stage::IV;
  r.duration = H / eps;
  const double c = (1 + a) * p_TIII;
  r.p_end = p_TIII * std::exp(H) / (1 + c * std::expm1(H));
  r.aux["H_IV"] = H;
  r.aux["residual"] = (1 - f) * H - std::log1p(c * std::expm1(H)) / (1 + a);
  const double p0 = p_TIII;
  r.g = [a, f, eps, p0, c](double dt) {
    const double e = std::expm1(eps * dt);
    const double pt = p0 * (e + 1) / (1 + c * e);
    return -(1 - f) * dt + std::log1p(c * e) / ((1 + a) * eps) + eps * (1 - p0) / (1 - pt) * std::exp(p0 - pt);
  };
  return r;
}

// ---------------------------------------------------------------------------

DampingResult damping_check(const OdeTrajectory& tr, const ModelParams& mp) {
  DampingResult r;
  if (tr.size() < 2) throw std::invalid_argument("damping_check: trajectory too short");
  r.times.push_back(tr.times.front());
  r.deviations.push_back(std::abs(tr.states.front().p - (1 - mp.f)));
  // p' = eps p (v - alpha p); a maximum is a + to - sign change of v - alpha p
  auto slope = [&](std::size_t i) { return tr.dy[i][2]; };
  const double tiny = 1e-14;
  for (std::size_t i = 1; i + 1 < tr.size(); ++i) {
    if (slope(i) > tiny && slope(i + 1) < -tiny) {
      const double t0 = tr.times[i], t1 = tr.times[i + 1];
      auto g = [&](double t) {
        const auto y = tr.y_at(t);
        const double v = tr.v_zero ? 0.0 : std::exp(y[0]);
        return v - mp.alpha * y[2];
      };
      const double tm = bisect(g, t0, t1, "damping_check");
      r.times.push_back(tm);
      r.deviations.push_back(std::abs(tr.y_at(tm)[2] - (1 - mp.f)));
    }
  }
  if (r.times.size() < 2) throw std::runtime_error("damping_check: fewer than two cycles on the trajectory");
  r.strictly_decreasing = true;
  for (std::size_t i = 1; i < r.deviations.size(); ++i)
    if (!(r.deviations[i] < r.deviations[i - 1])) r.strictly_decreasing = false;
  return r;
}

}  // namespace escape
