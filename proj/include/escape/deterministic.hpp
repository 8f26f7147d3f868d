#pragma once

#include <array>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "escape/asymptotics.hpp"
#include "escape/core.hpp"

namespace escape {

struct OdeOptions {
  double h0 = 1e-3;
  double hmax = 10.0;
  long max_steps = 20'000'000;
};

// Accepted steps of the adaptive integrator. Internally the prey densities
// are carried as logarithms so that exponentially small values keep full
// relative accuracy; a prey that starts at exactly 0 stays at 0.
struct OdeTrajectory {
  std::vector<double> times;
  std::vector<SystemState> states;
  std::vector<std::array<double, 3>> y;   // (log v, log vstar, p)
  std::vector<std::array<double, 3>> dy;  // time derivative of y at each node
  bool v_zero = false, vstar_zero = false;
  std::string dt_policy;

  std::size_t size() const { return times.size(); }
  // Cubic Hermite interpolation in the integration variables.
  std::array<double, 3> y_at(double t) const;
  SystemState at(double t) const;
};

// Dormand-Prince 5(4) with error control per unit step: a step of length h
// is accepted when max |local error| / h <= tol.
OdeTrajectory integrate_ode(const ModelParams& mp, const SystemState& u0, double t_end, double tol = 1e-10,
                            const OdeOptions& opt = {});

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct StageTimes {
  int cycle = 0;
  double T_s = kNaN, T_I = kNaN, T_II = kNaN, T_III = kNaN, T_IV = kNaN;
  double threshold = 0;
  bool complete = false;
};

struct StageDetection {
  std::vector<StageTimes> cycles;  // complete cycles, then at most one partial cycle
  bool ambiguous = false;          // a threshold was grazed without a clean crossing
  std::vector<std::string> notes;
  std::size_t complete_cycles() const;
};

// Threshold epsilon^q crossings: T_s is where vstar leaves (0, eps^q) (or the
// start if it is already above), T_I/T_II are the down/up crossings of v and
// T_III/T_IV those of vstar. Empty when v never reaches eps^q.
StageDetection detect_stages(const OdeTrajectory& traj, const ModelParams& mp);

// Same definitions on a sampled path (SDE), with linear interpolation of the
// log densities between samples. Absorption ends the search.
StageDetection detect_stages_sampled(const std::vector<double>& t, const std::vector<SystemState>& s,
                                     const ModelParams& mp);

struct StagePrediction {
  Stage stage = Stage::I;
  double duration = 0;
  double p_end = 0;
  std::map<std::string, double> aux;
  // Stage IV only: log(vstar(t)/vstar(T_III)) as a function of t - T_III.
  std::function<double(double)> g;
};

// Stages I and III: p_end from the first-order expansion in eps; the duration
// integrates the fast-prey reduction started from log(vstar/v) = log_ratio
// (default: the nominal value at the entering threshold). When delta changes
// sign before the leaving type reaches eps^q the duration is +inf and
// aux["threshold_reached"] is 0.
StagePrediction predict_stage_I(double p_Ts, const ModelParams& mp, std::optional<double> log_ratio = {});
StagePrediction predict_stage_II(double p_TI, const ModelParams& mp);
StagePrediction predict_stage_III(double p_TII, const ModelParams& mp, std::optional<double> log_ratio = {});
StagePrediction predict_stage_IV(double p_TIII, const ModelParams& mp);

// Positive roots of the Stage II and Stage IV duration equations.
double solve_H_II(double alpha, double f, double p_TI);
double solve_H_IV(double alpha, double f, double p_TIII);

struct DampingResult {
  std::vector<double> times;       // cycle starts
  std::vector<double> deviations;  // |p - (1-f)| at each start
  bool strictly_decreasing = false;
};

// Cycle starts are the initial time and every later local maximum of p (the
// threshold cycles of detect_stages stop repeating once the oscillation is
// too shallow to reach eps^q). Throws when fewer than two starts exist.
DampingResult damping_check(const OdeTrajectory& traj, const ModelParams& mp);

}  // namespace escape
