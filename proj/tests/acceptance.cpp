// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "escape/asymptotics.hpp"
#include "escape/coalescent.hpp"
#include "escape/core.hpp"
#include "escape/deterministic.hpp"
#include "escape/feller.hpp"
#include "escape/harness.hpp"
#include "escape/stats.hpp"
#include "escape/stochastic.hpp"

using namespace escape;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kZMax = 3.0;
constexpr double kPMin = 0.01;
constexpr double kDriftMax = 1e-12;
constexpr double kResidualMax = 1e-12;

struct Verdict {
  bool pass = true;
  std::vector<std::string> lines;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    lines.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
};

std::string f(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string f(const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

// 1. Failed-mutant probability from exact birth-death paths.
Verdict c1() {
  Verdict v;
  ModelParams mp;
  mp.alpha = 1;
  mp.f = 0.8;
  mp.kstar = 1;
  mp.V = 1e4;
  mp.epsilon = 0.05;
  mp = make_params(mp);
  const long n = 5000;
  const double t_f = 1 / (mp.epsilon * mp.epsilon);
  long failed = 0;
  for (long i = 0; i < n; ++i) {
    Rng rng(101, std::uint64_t(i));
    BdOptions o;
    o.stop_on_absorption = true;
    // past eps the path can no longer be a failed mutant
    o.stop_vstar_at = (long long)std::ceil(mp.epsilon * mp.V);
    auto p = simulate_bd(mp, initial_counts(mp), t_f, rng, o);
    failed += classify_outcome(summarize(p), mp, t_f).label == OutcomeLabel::FailedMutant;
  }
  const double pf = p_failed(mp.alpha, mp.f, mp.kstar);
  const double z = z_score(failed, n, pf);
  const auto r = bd_rates(mp, initial_counts(mp));
  v.check(std::abs(z) <= kZMax, f("BD failed %ld/%ld = %.4f vs p_failed = %.4f, z = %.2f", failed, n,
                                  double(failed) / n, pf, z));
  v.lines.push_back(f("note linear birth-death extinction at u_W: death/birth = %.4f",
                      r.mutant_death / r.mutant_birth));
  return v;
}

// 2. Feller absorption law and the exact sampler against fine-step EM.
Verdict c2() {
  Verdict v;
  const long n = 100000;
  for (double w0 : {0.5, 1.0, 2.0})
    for (double t : {0.5, 1.0, 4.0}) {
      long absorbed = 0;
      for (long i = 0; i < n; ++i) {
        Rng rng(201, std::uint64_t(i) * 16 + std::uint64_t(w0 * 2) * 4 + std::uint64_t(t));
        absorbed += sample_transition(w0, t, rng).absorbed;
      }
      const double p = absorption_prob(w0, t);
      const double z = z_score(absorbed, n, p);
      v.check(std::abs(z) <= kZMax, f("w0=%.1f t=%.1f absorbed %.4f vs %.4f, z = %.2f", w0, t, double(absorbed) / n, p, z));
    }
  std::vector<double> ex, em;
  const int m = 4000;
  for (int i = 0; i < m; ++i) {
    Rng a(202, std::uint64_t(i)), b(203, std::uint64_t(i));
    ex.push_back(sample_transition(1.0, 1.0, a).value);
    em.push_back(sample_em(1.0, 1.0, 1e-4, b).value);
  }
  const auto ks = ks_two_sample(ex, em);
  v.check(ks.p_value >= kPMin, f("exact vs EM(dt=1e-4) at w0=1 t=1, %d draws each: KS D = %.4f p = %.3f", m,
                                 ks.statistic, ks.p_value));
  return v;
}

// 3. Equilibria and damped oscillation.
Verdict c3() {
  Verdict v;
  ModelParams mp;
  mp.alpha = 1;
  mp.f = 0.8;
  mp.epsilon = 0.01;
  mp = make_params(mp);
  const auto eq = equilibria(mp);
  for (auto [name, u] : {std::pair{"u_W", eq.u_W}, std::pair{"u_M", eq.u_M}, std::pair{"u_C", eq.u_C}}) {
    const auto d = drift(mp, u.v, u.vstar, u.p);
    const double mx = std::max({std::abs(d[0]), std::abs(d[1]), std::abs(d[2])});
    v.check(mx < kDriftMax, f("|drift| at %s = %.2e", name, mx));
  }
  auto tr = integrate_ode(mp, initial_state(mp), 1 / (mp.epsilon * mp.epsilon));
  auto dc = damping_check(tr, mp);
  std::string s;
  for (std::size_t i = 0; i < dc.times.size(); ++i) s += f(" (%.0f, %.4f)", dc.times[i], dc.deviations[i]);
  v.check(dc.strictly_decreasing && dc.times.size() >= 4,
          f("|p - (1-f)| at %zu cycle starts strictly decreasing:%s", dc.times.size(), s.c_str()));
  const auto end = tr.states.back();
  v.check(max_norm_distance(end, eq.u_C) < 0.01, f("state at 1/eps^2 within %.4f of u_C", max_norm_distance(end, eq.u_C)));
  return v;
}

// 4. Stage predictors against ODE hitting values.
Verdict c4() {
  Verdict v;
  struct Err {
    double p = 0, d = 0;
  };
  auto run_grid = [&](const std::vector<double>& grid, bool late) {
    std::vector<std::array<Err, 2>> out;
    for (double eps : grid) {
      ModelParams mp;
      mp.epsilon = eps;
      mp = make_params(mp);
      auto tr = integrate_ode(mp, initial_state(mp), (late ? 25.0 : 24.0) / eps);
      auto det = detect_stages(tr, mp);
      std::array<Err, 2> e{};
      if (det.cycles.empty()) {
        out.push_back({Err{kNaN, kNaN}, Err{kNaN, kNaN}});
        continue;
      }
      const auto& c = det.cycles[0];
      if (!late) {
        const auto s0 = tr.at(c.T_s);
        auto a = predict_stage_I(s0.p, mp, std::log(s0.vstar / s0.v));
        e[0] = {std::abs(a.p_end - tr.at(c.T_I).p), std::abs(a.duration / (c.T_I - c.T_s) - 1)};
        auto b = predict_stage_II(tr.at(c.T_I).p, mp);
        e[1] = {std::abs(b.p_end - tr.at(c.T_II).p), std::abs(b.duration / (c.T_II - c.T_I) - 1)};
      } else {
        if (std::isnan(c.T_IV)) {
          out.push_back({Err{kNaN, kNaN}, Err{kNaN, kNaN}});
          continue;
        }
        const auto s2 = tr.at(c.T_II);
        auto a = predict_stage_III(s2.p, mp, std::log(s2.vstar / s2.v));
        e[0] = {std::abs(a.p_end - tr.at(c.T_III).p), std::abs(a.duration / (c.T_III - c.T_II) - 1)};
        auto b = predict_stage_IV(tr.at(c.T_III).p, mp);
        e[1] = {std::abs(b.p_end - tr.at(c.T_IV).p), std::abs(b.duration / (c.T_IV - c.T_III) - 1)};
      }
      out.push_back(e);
    }
    return out;
  };
  auto report = [&](const char* stage, const std::vector<double>& grid, const std::vector<Err>& e) {
    bool dec_p = true, dec_d = true;
    std::string s;
    for (std::size_t i = 0; i < e.size(); ++i) {
      s += f(" eps=%g: dp=%.2e dT/T=%.2e;", grid[i], e[i].p, e[i].d);
      if (std::isnan(e[i].p)) dec_p = dec_d = false;
      if (i > 0) {
        dec_p = dec_p && e[i].p < e[i - 1].p;
        dec_d = dec_d && e[i].d < e[i - 1].d;
      }
    }
    v.check(dec_p && dec_d, f("Stage %s errors decrease:%s", stage, s.c_str()));
  };
  const std::vector<double> coarse{0.02, 0.01, 0.005}, fine{0.002, 0.001, 0.0005};
  auto a = run_grid(coarse, false);
  auto b = run_grid(fine, true);
  std::vector<Err> e1, e2, e3, e4;
  for (auto& x : a) e1.push_back(x[0]), e2.push_back(x[1]);
  for (auto& x : b) e3.push_back(x[0]), e4.push_back(x[1]);
  report("I", coarse, e1);
  report("II", coarse, e2);
  // Stages III and IV need eps <= 0.002 for the mutant to reach eps^4 again
  report("III", fine, e3);
  report("IV", fine, e4);
  double worst = 0;
  for (double alpha : {0.5, 1.0, 2.0})
    for (double ff : {0.7, 0.8, 0.9}) {
      if (ff - alpha * (1 - ff) <= 0) continue;
      for (double frac : {0.1, 0.4, 0.7, 0.95}) {
        // Stage II enters with p above 1-f, Stage IV below it
        const double p2 = (1 - ff) + frac * ff, p4 = frac * (1 - ff);
        const double h2 = solve_H_II(alpha, ff, p2);
        worst = std::max(worst, std::abs((1 - ff) * h2 - std::log1p(alpha * p2 * h2) / alpha));
        const double h4 = solve_H_IV(alpha, ff, p4);
        worst = std::max(worst, std::abs((1 - ff) * h4 - std::log1p((1 + alpha) * p4 * std::expm1(h4)) / (1 + alpha)));
      }
    }
  v.check(worst < kResidualMax, f("H_II / H_IV worst residual %.2e", worst));
  return v;
}

// 5. Beta-scaling outcome table with SDE campaigns at V = 1e6.
Verdict c5() {
  Verdict v;
  struct Case {
    const char* name;
    double f, beta, t_factor;
  };
  const double phi8 = phi_lim(1, 0.8), phi55 = phi_lim(1, 0.55), psi55 = psi_lim(1, 0.55);
  const std::vector<Case> cases = {{"beta = phi/2 (f=0.8)", 0.8, 0.5 * phi8, 1},
                                   {"phi < beta < psi (f=0.55)", 0.55, std::sqrt(phi55 * psi55), 1},
                                   {"beta = 2 phi > psi (f=0.8)", 0.8, 2 * phi8, 4}};
  for (const auto& c : cases) {
    ExperimentSpec s;
    s.mp.scaling = Scaling::Beta;
    s.mp.f = c.f;
    s.mp.beta = c.beta;
    s.mp.V = 1e6;
    s.mp = make_params(s.mp);
    s.fidelity = Fidelity::Sde;
    s.n_paths = 2000;
    s.t_factor = c.t_factor;
    s.dt = 0.002;
    s.seed = 501;
    s.stop_on_absorption = true;
    auto r = run_campaign(s);
    std::string detail;
    bool ok = r.predicted.has_value();
    if (ok)
      for (auto l : all_outcomes()) {
        auto m = predicted_mass(*r.predicted, l);
        const auto& p = r.counts[l];
        if (!m) {
          detail += f(" %s %ld", to_string(l), p.count);
          continue;
        }
        const double z = z_score(p.count, p.n, *m);
        ok = ok && std::abs(z) <= kZMax;
        detail += f(" %s %.3f/%.3f z=%.1f;", to_string(l), p.freq(), *m, z);
      }
    v.check(ok, f("%s, eps=%.4f, %s:%s", c.name, s.mp.epsilon, r.predicted ? to_string(r.predicted->regime) : "?",
                  detail.c_str()));
    if (r.predicted) {
      // split among the paths whose mutant escaped, which does not involve p_failed
      const long esc = r.n_paths - r.counts[OutcomeLabel::FailedMutant].count;
      const double pesc = 1 - r.predicted->p_uW_failed;
      std::string cond;
      for (auto l : {OutcomeLabel::MutantLostAfterRise, OutcomeLabel::WildLost, OutcomeLabel::Coexistence})
        cond += f(" %s %.3f/%.3f;", to_string(l), esc ? double(r.counts[l].count) / double(esc) : 0.0,
                  pesc > 0 ? *predicted_mass(*r.predicted, l) / pesc : 0.0);
      v.lines.push_back(f("note given escape (%ld paths):%s", esc, cond.c_str()));
    }
  }
  return v;
}

// 6. Wild-type bottleneck ratio against the Feller law under kappa scaling.
Verdict c6() {
  Verdict v;
  ModelParams mp;
  mp.scaling = Scaling::Kappa;
  mp.alpha = 1;
  mp.f = solve_fhat(1);
  mp.kappa = 0.2;
  mp.V = 1e6;
  mp.q = 1;
  mp = make_params(mp);
  const double eps = mp.epsilon;
  auto tr = integrate_ode(mp, initial_state(mp), 3 / eps + 2000, 1e-11);
  auto det = detect_stages(tr, mp);
  if (det.cycles.empty()) {
    v.check(false, "ODE has no Stage I/II crossing");
    return v;
  }
  const auto& c = det.cycles[0];
  const auto sI = tr.at(c.T_I);
  const auto xb = xi_II(mp, sI.p, sI.v, c.T_I);
  const double center = xb.s_star / eps, half = std::pow(eps, -mp.m);
  // the mutant's rise time fluctuates; paths are aligned on vstar first reaching eps
  double anchor = kNaN;
  for (std::size_t i = 1; i < tr.size(); ++i)
    if (tr.states[i].vstar >= eps) {
      double lo = tr.times[i - 1], hi = tr.times[i];
      for (int k = 0; k < 100; ++k) {
        const double mid = 0.5 * (lo + hi);
        (tr.at(mid).vstar >= eps ? hi : lo) = mid;
      }
      anchor = hi;
      break;
    }
  const double t0 = center - half, t1 = center + half;
  std::vector<double> ratios;
  long rose = 0, died = 0;
  const long n = 20000;
  for (long i = 0; i < n; ++i) {
    Rng rng(601, std::uint64_t(i));
    SdeOptions o;
    o.dt = 0.005;
    o.stop_on_absorption = true;
    o.record_stride = 1L << 40;
    double shift = kNaN, v1 = kNaN;
    o.observer = [&](const SystemState& s) {
      if (std::isnan(shift) && s.vstar >= eps) shift = s.t - anchor;
      if (!std::isnan(shift) && std::isnan(v1) && s.t >= t1 + shift) v1 = s.v;
    };
    auto p = integrate_sde(mp, initial_state(mp), t1 + 600, rng, o);
    if (std::isnan(shift)) continue;
    ++rose;
    if (std::isnan(v1) || v1 <= 0) {
      died += p.absorbed_v.has_value() || v1 <= 0;
      continue;
    }
    ratios.push_back(v1 / tr.at(t0).v);
  }
  const double T = std::sqrt(2 * M_PI) * (mp.k + 1) * *xb.xi_limit;
  const auto ks = ks_one_sample(ratios, [&](double x) { return conditional_cdf(1, T, x); });
  double mean = 0;
  for (double x : ratios) mean += x;
  mean /= double(std::max<std::size_t>(1, ratios.size()));
  v.check(ratios.size() >= 100 && ks.p_value >= kPMin,
          f("eps=%.5f, %ld rose, %ld lost v, %zu survivors; KS vs w[%.3f]: D = %.3f p = %.2e", eps, rose, died,
            ratios.size(), T, ks.statistic, ks.p_value));
  v.lines.push_back(f("note Xi_II at this V = %.3f vs limit %.3f; mean ratio %.3f vs limit law %.3f; absorbed %.3f vs %.3f",
                      xb.xi, *xb.xi_limit, mean, 1 / (1 - std::exp(-2 / T)),
                      rose ? double(died) / double(rose) : 0.0, std::exp(-2 / T)));
  return v;
}

// 7. Exact BD genealogy against rate-based lineage tracking over one bottleneck.
Verdict c7() {
  Verdict v;
  ModelParams mp;
  mp.epsilon = 0.08;
  mp.V = 1e4;
  mp.q = 2;
  mp = make_params(mp);
  // run until the ODE's wild type has recovered from its first bottleneck
  auto tr = integrate_ode(mp, initial_state(mp), 20 / (mp.epsilon * mp.epsilon));
  double vmin = 1, tmin = 0, t_end = 0;
  for (std::size_t i = 0; i < tr.size() && tr.times[i] < 3 / mp.epsilon; ++i)
    if (tr.states[i].v < vmin) vmin = tr.states[i].v, tmin = tr.times[i];
  for (std::size_t i = 0; i < tr.size(); ++i)
    if (tr.times[i] > tmin && tr.states[i].v > 0.1) {
      t_end = tr.times[i];
      break;
    }
  const int n = 10;
  std::map<std::string, long> exact, tracked;
  std::map<int, long> n0_exact;
  long used = 0;
  for (long i = 0; i < 1200; ++i) {
    Rng rng(701, std::uint64_t(i));
    BdOptions o;
    o.genealogy = true;
    o.record_dt = 1;
    auto p = simulate_bd(mp, initial_counts(mp), t_end, rng, o);
    if (p.sup_vstar < mp.epsilon * mp.V || p.absorbed_v || (long)p.wild->alive.size() < n) continue;
    ++used;
    Rng a(702, std::uint64_t(i)), b(703, std::uint64_t(i));
    const auto g = bd_genealogy(p, n, Which::Wild, a);
    ++exact[g.signature()];
    ++n0_exact[g.n0()];
    ++tracked[track_lineages(p, mp, n, Which::Wild, b).signature()];
  }
  const auto chi = chi2_homogeneity(exact, tracked);
  std::string hist;
  for (auto [k, c] : n0_exact) hist += f(" %d:%ld", k, c);
  v.check(used >= 200 && chi.p_value >= kPMin,
          f("t_end=%.1f, %ld conditioned paths, n0 histogram%s; chi2 = %.2f dof %d p = %.3f", t_end, used, hist.c_str(),
            chi.statistic, chi.dof, chi.p_value));
  ModelParams km;
  km.scaling = Scaling::Kappa;
  km.f = solve_fhat(1);
  km.V = 1e6;
  km = make_params(km);
  bool rows = true;
  for (int i = 0; i < 1000; ++i) {
    Rng r(704, std::uint64_t(i));
    auto a = theorem3_predict(km, OutcomeLabel::FailedMutant, n, r);
    auto b = theorem3_predict(km, OutcomeLabel::WildLost, n, r);
    rows = rows && a.n0() == n && b.n0() == 1 && b.blocks[0] == n;
  }
  v.check(rows, "large-V rows: failed -> n singletons, wild lost -> one block (1000 draws each)");
  return v;
}

// 8. Kingman properties at n = 3.
Verdict c8() {
  Verdict v;
  const long n = 100000;
  const double t = 0.4;
  long three = 0;
  std::map<std::pair<int, int>, long> first;
  for (long i = 0; i < n; ++i) {
    Rng a(801, std::uint64_t(i)), b(802, std::uint64_t(i));
    three += kingman_sample(3, t, a).partition.n0() == 3;
    auto r = kingman_sample(3, kInf, b);
    ++first[{r.first_a, r.first_b}];
  }
  const double z = z_score(three, n, std::exp(-3 * t));
  v.check(std::abs(z) <= kZMax, f("P(n0=3 at t=0.4) = %.4f vs %.4f, z = %.2f", double(three) / n, std::exp(-3 * t), z));
  bool ok = first.size() == 3;
  std::string s;
  for (auto& [pr, c] : first) {
    const Proportion p{c, n};
    const double zz = z_score(c, n, 1.0 / 3);
    ok = ok && std::abs(zz) <= kZMax && p.lo95() <= 1.0 / 3 + 2 * p.stderr_() && p.hi95() >= 1.0 / 3 - 2 * p.stderr_();
    s += f(" (%d,%d): %.4f [%.4f, %.4f] z=%.2f;", pr.first, pr.second, p.freq(), p.lo95(), p.hi95(), zz);
  }
  v.check(ok, f("first merge pairs:%s", s.c_str()));
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 9. Campaign determinism across worker counts.
Verdict c9() {
  Verdict v;
  const fs::path root = fs::temp_directory_path() / "escape_acceptance_c9";
  fs::remove_all(root);
  auto spec = [&](Fidelity fid, int workers, const std::string& tag) {
    ExperimentSpec s;
    s.mp.epsilon = 0.05;
    s.mp.V = fid == Fidelity::Bd ? 500 : 1e4;
    s.mp = make_params(s.mp);
    s.fidelity = fid;
    s.n_paths = 40;
    s.t_factor = fid == Fidelity::Bd ? 0.1 : 0.25;
    s.dt = 2e-3;
    s.sample_n = 5;
    s.seed = 901;
    s.mc_draws = 2000;
    s.workers = workers;
    s.out_dir = (root / tag).string();
    return s;
  };
  for (auto fid : {Fidelity::Sde, Fidelity::Bd}) {
    const std::string name = to_string(fid);
    run_campaign(spec(fid, 1, name + "_w1"));
    run_campaign(spec(fid, 3, name + "_w3"));
    run_campaign(spec(fid, 3, name + "_w3_again"));
    int files = 0, same = 0;
    for (const auto& e : fs::directory_iterator(root / (name + "_w1"))) {
      const auto fn = e.path().filename();
      const auto a = slurp(e.path());
      ++files;
      same += a == slurp(root / (name + "_w3") / fn) && a == slurp(root / (name + "_w3_again") / fn);
    }
    v.check(files >= 6 && same == files, f("%s campaign: %d/%d CSV files byte-identical across workers 1, 3, 3", name.c_str(),
                                           same, files));
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> all = {
      {"failed-mutant probability (BD, V=1e4)", c1},
      {"Feller absorption and exact sampler", c2},
      {"equilibria and damping", c3},
      {"stage predictors vs ODE", c4},
      {"beta-scaling outcome table (SDE, V=1e6)", c5},
      {"bottleneck ratio vs Feller law", c6},
      {"BD genealogy vs lineage tracking", c7},
      {"Kingman properties", c8},
      {"campaign determinism", c9}};
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
  std::vector<std::string> summary;
  bool all_pass = true;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const int id = int(i) + 1;
    if (!pick.empty() && !pick.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    const Verdict v = all[i].second();
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& l : v.lines) std::printf("  [%d] %s\n", id, l.c_str());
    const std::string line = f("criterion %d: %s  %s (%.1f s)", id, v.pass ? "PASS" : "FAIL", all[i].first, sec);
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    summary.push_back(line);
    all_pass = all_pass && v.pass;
  }
  std::printf("\nsummary\n");
  for (const auto& s : summary) std::printf("%s\n", s.c_str());
  return all_pass ? 0 : 1;
}
