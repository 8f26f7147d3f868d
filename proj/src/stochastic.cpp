#include "escape/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace escape {

SdePath integrate_sde(const ModelParams& mp, const SystemState& u0, double t_end, Rng& rng, const SdeOptions& opt) {
  if (!(opt.dt > 0)) throw std::invalid_argument("integrate_sde: dt must be > 0");
  if (opt.dt > kMaxSdeDt) throw std::invalid_argument("integrate_sde: dt exceeds the stability bound 0.05");
  if (!(u0.v >= 0 && u0.vstar >= 0 && u0.p >= 0)) throw std::invalid_argument("integrate_sde: negative initial state");
  if (!(t_end >= u0.t)) throw std::invalid_argument("integrate_sde: t_end before start");
  if (opt.record_stride < 1) throw std::invalid_argument("integrate_sde: record_stride must be >= 1");

  SdePath path;
  path.dt = opt.dt;
  path.p_noise_enabled = opt.p_noise;
  const double V = mp.V, P = mp.predator_scale();
  const double a = mp.alpha, f = mp.f, eps = mp.epsilon;
  const double floor_v = opt.floor_cells / V, floor_p = opt.floor_cells / P;
  const double sq = std::sqrt(opt.dt) * opt.noise_scale;
  std::normal_distribution<double> z;

  SystemState s = u0;
  bool v_dead = s.v <= 0, vs_dead = s.vstar <= 0, p_dead = s.p <= 0;
  if (v_dead) path.absorbed_v = s.t;
  if (vs_dead) path.absorbed_vstar = s.t;
  path.sup_vstar = s.vstar;
  path.times.push_back(s.t);
  path.states.push_back(s);

  const long n = std::max(0L, long(std::ceil((t_end - u0.t) / opt.dt - 1e-9)));
  for (long i = 1; i <= n; ++i) {
    const double t = (i == n) ? t_end : u0.t + double(i) * opt.dt;
    const double h = t - s.t;
    const double v = s.v, vs = s.vstar, p = s.p;
    double nv = 0, nvs = 0, np = p;
    // every coordinate draws its normal so the stream layout does not depend on absorption
    const double z1 = z(rng), z2 = z(rng);
    const double z3 = opt.p_noise ? z(rng) : 0.0;
    const double sh = (h == opt.dt) ? sq : std::sqrt(h) * opt.noise_scale;
    if (!v_dead) nv = v + v * (1 - p - v - vs) * h + std::sqrt(std::max(v * (mp.k + v + vs + p), 0.0) / V) * sh * z1;
    if (!vs_dead)
      nvs = vs + vs * (f - v - vs) * h + std::sqrt(std::max(vs * (mp.kstar + v + vs), 0.0) / V) * sh * z2;
    if (!p_dead) {
      np = p + eps * p * (v - a * p) * h;
      if (opt.p_noise) np += std::sqrt(std::max(eps * p * (mp.h + v + a * p), 0.0) / P) * sh * z3;
    } else {
      np = 0;
    }
    if (!std::isfinite(nv) || !std::isfinite(nvs) || !std::isfinite(np)) {
      std::ostringstream m;
      m << "integrate_sde: non-finite state at t=" << t;
      throw std::runtime_error(m.str());
    }
    if (!v_dead && nv <= floor_v) {
      nv = 0;
      v_dead = true;
      path.absorbed_v = t;
    }
    if (!vs_dead && nvs <= floor_v) {
      nvs = 0;
      vs_dead = true;
      path.absorbed_vstar = t;
    }
    if (!p_dead && np <= floor_p) {
      np = 0;
      p_dead = true;
    }
    s = {nv, nvs, np, t};
    path.sup_vstar = std::max(path.sup_vstar, nvs);
    if (opt.observer) opt.observer(s);
    const bool stop = (opt.stop_on_absorption && (v_dead || vs_dead)) ||
                      (opt.stop_vstar_above > 0 && nvs >= opt.stop_vstar_above) || (v_dead && vs_dead);
    if (i % opt.record_stride == 0 || i == n || stop) {
      path.times.push_back(t);
      path.states.push_back(s);
    }
    if (stop) break;
  }
  path.t_end = s.t;
  return path;
}

BdRates bd_rates(const ModelParams& mp, const Counts& c) {
  const double v = double(c.v) / mp.V, vs = double(c.vstar) / mp.V, p = double(c.p) / mp.predator_scale();
  const double eps = mp.epsilon;
  return {(mp.k + 1) / 2,
          (mp.k - 1) / 2 + v + vs + p,
          (mp.kstar + mp.f) / 2,
          (mp.kstar - mp.f) / 2 + v + vs,
          eps * (mp.h / 2 + v),
          eps * (mp.h / 2 + mp.alpha * p)};
}

Counts initial_counts(const ModelParams& mp) {
  const double a = mp.alpha;
  return {std::llround(mp.V * a / (1 + a)), 1, std::llround(mp.predator_scale() / (1 + a))};
}

namespace {

struct Living {
  std::vector<std::int32_t> ids;
  Genealogy g;
  void init(long long n) {
    if (n > INT32_MAX) throw std::invalid_argument("simulate_bd: genealogy supports at most 2^31 individuals");
    g.founders = n;
    ids.resize(std::size_t(n));
    for (long long i = 0; i < n; ++i) ids[std::size_t(i)] = std::int32_t(i);
  }
  void birth(double t, Rng& rng) {
    const auto k = std::size_t(rng.uniform() * double(ids.size()));
    const auto child = g.founders + (long long)g.births.size();
    if (child > INT32_MAX) throw std::runtime_error("simulate_bd: genealogy id overflow");
    g.births.push_back({ids[k], t});
    ids.push_back(std::int32_t(child));
  }
  void death(Rng& rng) {
    const auto k = std::size_t(rng.uniform() * double(ids.size()));
    ids[k] = ids.back();
    ids.pop_back();
  }
};

}  // namespace

BdPath simulate_bd(const ModelParams& mp, const Counts& c0, double t_end, Rng& rng, const BdOptions& opt) {
  if (c0.v < 0 || c0.vstar < 0 || c0.p < 0) throw std::invalid_argument("simulate_bd: negative initial counts");
  if (!(t_end >= 0)) throw std::invalid_argument("simulate_bd: t_end must be >= 0");
  if (opt.record_dt < 0) throw std::invalid_argument("simulate_bd: record_dt must be >= 0");
  BdPath path;
  path.V = mp.V;
  path.P = mp.predator_scale();
  Counts c = c0;
  double t = 0;
  double inv_v = 0, inv_vs = 0;
  Living wild, mutant;
  if (opt.genealogy) {
    wild.init(c.v);
    mutant.init(c.vstar);
  }
  if (c.v == 0) path.absorbed_v = 0.0;
  if (c.vstar == 0) path.absorbed_vstar = 0.0;
  path.sup_vstar = c.vstar;

  auto record = [&](double at) {
    path.times.push_back(at);
    path.counts.push_back(c);
    path.inv_n_v.push_back(inv_v + (c.v > 0 ? (at - t) / double(c.v) : 0.0));
    path.inv_n_vstar.push_back(inv_vs + (c.vstar > 0 ? (at - t) / double(c.vstar) : 0.0));
  };
  record(0.0);
  double next_grid = opt.record_dt;

  const double Vn = mp.V, Pn = path.P, eps = mp.epsilon;
  const double wb = (mp.k + 1) / 2, wd0 = (mp.k - 1) / 2;
  const double mb = (mp.kstar + mp.f) / 2, md0 = (mp.kstar - mp.f) / 2;
  bool stopped = false;
  while (true) {
    const double v = double(c.v) / Vn, vs = double(c.vstar) / Vn, p = double(c.p) / Pn;
    const double r[6] = {double(c.v) * wb,
                         double(c.v) * (wd0 + v + vs + p),
                         double(c.vstar) * mb,
                         double(c.vstar) * (md0 + v + vs),
                         double(c.p) * eps * (mp.h / 2 + v),
                         double(c.p) * eps * (mp.h / 2 + mp.alpha * p)};
    const double R = r[0] + r[1] + r[2] + r[3] + r[4] + r[5];
    if (!std::isfinite(R)) throw std::runtime_error("simulate_bd: non-finite total rate");
    const double tn = R > 0 ? t - std::log(rng.uniform_pos()) / R : std::numeric_limits<double>::infinity();
    const double stop_at = std::min(tn, t_end);
    if (opt.record_dt > 0)
      while (next_grid < stop_at) {
        record(next_grid);
        next_grid += opt.record_dt;
      }
    if (tn >= t_end) {
      inv_v += c.v > 0 ? (t_end - t) / double(c.v) : 0.0;
      inv_vs += c.vstar > 0 ? (t_end - t) / double(c.vstar) : 0.0;
      t = t_end;
      break;
    }
    if (path.events >= opt.event_budget) {
      path.budget_exhausted = true;
      break;
    }
    inv_v += c.v > 0 ? (tn - t) / double(c.v) : 0.0;
    inv_vs += c.vstar > 0 ? (tn - t) / double(c.vstar) : 0.0;
    t = tn;
    ++path.events;
    double u = rng.uniform() * R;
    int e = 0;
    while (e < 5 && u >= r[e]) u -= r[e++];
    while (r[e] == 0) --e;  // guard against rounding onto a zero-rate event
    switch (e) {
      case 0:
        ++c.v;
        if (opt.genealogy) wild.birth(t, rng);
        break;
      case 1:
        --c.v;
        if (opt.genealogy) wild.death(rng);
        if (c.v == 0) path.absorbed_v = t;
        break;
      case 2:
        ++c.vstar;
        if (opt.genealogy) mutant.birth(t, rng);
        path.sup_vstar = std::max(path.sup_vstar, c.vstar);
        break;
      case 3:
        --c.vstar;
        if (opt.genealogy) mutant.death(rng);
        if (c.vstar == 0) path.absorbed_vstar = t;
        break;
      case 4: ++c.p; break;
      default: --c.p; break;
    }
    if (opt.record_dt == 0) record(t);
    stopped = (opt.stop_on_absorption && (c.v == 0 || c.vstar == 0)) ||
              (opt.stop_vstar_at > 0 && c.vstar >= opt.stop_vstar_at) || (c.v == 0 && c.vstar == 0);
    if (stopped) break;
  }
  path.t_end = t;
  if (path.times.back() != t || opt.record_dt > 0) {
    if (path.times.back() != t) record(t);
  }
  if (opt.genealogy) {
    wild.g.alive = std::move(wild.ids);
    mutant.g.alive = std::move(mutant.ids);
    path.wild = std::move(wild.g);
    path.mutant = std::move(mutant.g);
  }
  return path;
}

const char* to_string(OutcomeLabel l) {
  switch (l) {
    case OutcomeLabel::FailedMutant: return "FailedMutant";
    case OutcomeLabel::MutantLostAfterRise: return "MutantLostAfterRise";
    case OutcomeLabel::WildLost: return "WildLost";
    case OutcomeLabel::Coexistence: return "Coexistence";
    case OutcomeLabel::Unresolved: return "Unresolved";
  }
  return "?";
}

OutcomeLabel outcome_from_string(const std::string& s) {
  for (auto l : {OutcomeLabel::FailedMutant, OutcomeLabel::MutantLostAfterRise, OutcomeLabel::WildLost,
                 OutcomeLabel::Coexistence, OutcomeLabel::Unresolved})
    if (s == to_string(l)) return l;
  throw std::invalid_argument("unknown outcome label: " + s);
}

PathSummary summarize(const SdePath& p) {
  return {p.sup_vstar, p.absorbed_v, p.absorbed_vstar, p.states.back(), p.t_end, false};
}

PathSummary summarize(const BdPath& p) {
  const Counts& c = p.counts.back();
  SystemState s{double(c.v) / p.V, double(c.vstar) / p.V, double(c.p) / p.P, p.t_end};
  return {double(p.sup_vstar) / p.V, p.absorbed_v, p.absorbed_vstar, s, p.t_end, p.budget_exhausted};
}

Outcome classify_outcome(const PathSummary& s, const ModelParams& mp, double t_f, double coexistence_radius) {
  Outcome o;
  o.final_state = s.final_state;
  o.t_resolved = s.t_end;
  const bool vs_gone = s.absorbed_vstar && *s.absorbed_vstar <= t_f;
  const bool v_gone = s.absorbed_v && *s.absorbed_v <= t_f;
  const bool reached_tf = s.t_end >= t_f;
  if (s.sup_vstar < mp.epsilon && (vs_gone || reached_tf) && !s.budget_exhausted) {
    o.label = OutcomeLabel::FailedMutant;
    if (vs_gone) o.t_resolved = *s.absorbed_vstar;
  } else if (v_gone) {
    o.label = OutcomeLabel::WildLost;
    o.t_resolved = *s.absorbed_v;
  } else if (vs_gone) {
    o.label = OutcomeLabel::MutantLostAfterRise;
    o.t_resolved = *s.absorbed_vstar;
  } else if (reached_tf && max_norm_distance(s.final_state, equilibria(mp).u_C) <= coexistence_radius) {
    o.label = OutcomeLabel::Coexistence;
  }
  return o;
}

}  // namespace escape
