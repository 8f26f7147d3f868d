#include "escape/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "escape/feller.hpp"
#include "escape/roots.hpp"

namespace escape {

namespace {
constexpr double kSqrt2Pi = 2.5066282746310002;

void check_standing(double alpha, double f, const char* who) {
  if (!(alpha > 0) || !(f > 0 && f < 1) || !(f - alpha * (1 - f) > 0))
    throw std::domain_error(std::string(who) + ": need alpha > 0, f < 1 and f - alpha(1-f) > 0");
}
}  // namespace

double phi_lim(double alpha, double f) {
  if (f >= 1) throw std::domain_error("phi_lim: diverges at f >= 1");
  check_standing(alpha, f, "phi_lim");
  return (-(f - alpha * (1 - f)) + std::log(1.0 / ((1 + alpha) * (1 - f)))) / alpha;
}

double solve_H(double alpha, double f) {
  check_standing(alpha, f, "solve_H");
  const double c = alpha / (1 + alpha);
  return positive_root([&](double H) { return std::log1p(c * H) / alpha - (1 - f) * H; }, "solve_H");
}

double psi_lim(double alpha, double f) {
  check_standing(alpha, f, "psi_lim");
  const double H = solve_H(alpha, f);
  const double adv = f - alpha * (1 - f);
  return -std::log(alpha * H / ((1 + alpha * (H + 1)) * adv)) / (1 + alpha) +
         (1 - f) * std::log((1 - f) * alpha * H / adv);
}

double solve_fhat(double alpha) {
  if (!(alpha > 0)) throw std::domain_error("solve_fhat: alpha must be > 0");
  const double lo = alpha / (1 + alpha);
  auto d = [&](double f) { return phi_lim(alpha, f) - psi_lim(alpha, f); };
  // scan for the first sign change; both functions vanish at the lower end
  const int n = 400;
  std::ostringstream scan;
  double prev_f = lo + (1 - lo) * 1e-3, prev = d(prev_f);
  for (int i = 1; i <= n; ++i) {
    const double fi = lo + (1 - lo) * (1e-3 + (1 - 2e-3) * double(i) / n);
    const double di = d(fi);
    if (i % 50 == 0) scan << " f=" << fi << ":" << di;
    if ((prev < 0) != (di < 0)) return bisect(d, prev_f, fi, "solve_fhat");
    prev_f = fi;
    prev = di;
  }
  throw std::runtime_error("solve_fhat: no sign change of phi_lim - psi_lim; scan:" + scan.str());
}

LimitFunctions limit_functions(double alpha, double f, bool with_fhat) {
  LimitFunctions r;
  r.phi_lim = phi_lim(alpha, f);
  r.H = solve_H(alpha, f);
  r.psi_lim = psi_lim(alpha, f);
  if (with_fhat) r.f_hat = solve_fhat(alpha);
  return r;
}

double epsilon_of_V(double phi, double kappa, double V) {
  if (!(V > std::exp(std::exp(1.0)))) throw std::domain_error("epsilon_of_V: need V > e^e");
  if (!(kappa > 0)) throw std::domain_error("epsilon_of_V: kappa must be > 0");
  if (!(phi > 0)) throw std::domain_error("epsilon_of_V: phi_lim must be > 0");
  const double L = std::log(V);
  return phi * (1.0 / L + 0.5 * std::log(L) / (L * L) - std::log(kappa * std::sqrt(phi)) / (L * L));
}

double p_failed(double alpha, double f, double kstar) {
  check_standing(alpha, f, "p_failed");
  return std::exp(-4.0 * (f - alpha * (1 - f)) / ((kstar + 1) * (alpha + 1)));
}

double t_wild(const ModelParams& mp) {
  const double a = mp.alpha, f = mp.f;
  return std::sqrt(2 * M_PI / (a * (1 - f) * (1 - f))) * (a / (1 + a)) * (mp.k + 1) * mp.kappa;
}

namespace {
// Everything in T_mutant except the eta^(alpha/H) factor.
double t_mutant_prefactor(const ModelParams& mp, double H) {
  const double a = mp.alpha, f = mp.f;
  const double base = (1 + a * (1 + H)) / ((1 + a) * a * (1 + H));
  return std::sqrt(2 * M_PI / ((1 - f) * mp.advantage())) * (mp.kstar + f) / f * std::pow(base, H) * mp.kappa;
}
}  // namespace

double t_mutant(const ModelParams& mp, double eta_iv) {
  if (!(eta_iv > 0)) throw std::domain_error("t_mutant: eta_IV must be > 0 (it is conditioned on survival)");
  const double H = solve_H(mp.alpha, mp.f);
  return t_mutant_prefactor(mp, H) * std::pow(eta_iv, mp.alpha / H);
}

double rho_wild(const ModelParams& mp) { return absorption_prob(1.0, t_wild(mp)); }

double upsilon(const ModelParams& mp) {
  return std::sqrt(1.0 / (mp.alpha * (1 - mp.f) * (1 - mp.f))) * (mp.alpha / (1 + mp.alpha)) * mp.kappa;
}

const char* to_string(Regime r) {
  switch (r) {
    case Regime::Thm1Case1: return "thm1_case1";
    case Regime::Thm1Case2: return "thm1_case2";
    case Regime::Thm1Case3: return "thm1_case3";
    case Regime::Thm2Critical: return "thm2_critical";
  }
  return "?";
}

const char* to_string(Stage s) {
  switch (s) {
    case Stage::I: return "I";
    case Stage::II: return "II";
    case Stage::III: return "III";
    case Stage::IV: return "IV";
  }
  return "?";
}

const char* to_string(GeneticCase c) {
  switch (c) {
    case GeneticCase::Failed: return "failed";
    case GeneticCase::WildLost: return "wild_lost";
    case GeneticCase::MutantLost: return "mutant_lost";
    case GeneticCase::Coexistence: return "coexistence";
  }
  return "?";
}

OutcomeProbabilities outcome_probs(const ModelParams& mp, const MonteCarloOptions& mc) {
  validate(mp);
  OutcomeProbabilities r;
  r.phi_lim = phi_lim(mp.alpha, mp.f);
  r.H = solve_H(mp.alpha, mp.f);
  r.psi_lim = psi_lim(mp.alpha, mp.f);
  r.p_failed = p_failed(mp.alpha, mp.f, mp.kstar);
  const double pf = r.p_failed;

  if (mp.scaling != Scaling::Kappa) {
    const double beta = mp.scaling == Scaling::Beta ? mp.beta : mp.epsilon * std::log(mp.V);
    const bool wild_lost = r.phi_lim / beta >= 1;
    const bool mutant_lost = r.psi_lim / beta >= 1;
    r.p_uW_failed = pf;
    if (wild_lost) {
      r.regime = Regime::Thm1Case1;
      r.p_uM = 1 - pf;
    } else if (mutant_lost) {
      r.regime = Regime::Thm1Case2;
      r.p_uW_lost = 1 - pf;
    } else {
      r.regime = Regime::Thm1Case3;
      r.p_uC = 1 - pf;
    }
    return r;
  }

  const double fhat = solve_fhat(mp.alpha);
  if (std::abs(mp.f - fhat) > 1e-8)
    throw std::invalid_argument("outcome_probs: kappa scaling is only defined at f = f_hat = " +
                                std::to_string(fhat) + " (use solve_fhat)");
  r.regime = Regime::Thm2Critical;
  const double tw = t_wild(mp);
  r.rho_W = absorption_prob(1.0, tw);
  const double pre = t_mutant_prefactor(mp, r.H);
  const double expo = mp.alpha / r.H;

  // eta_IV ~ w[T_wild] given survival; chunks are keyed by stream id so the
  // merge order never depends on the thread schedule
  const long draws = std::max(2L, mc.draws);
  const int chunks = 64;
  std::vector<double> sum(chunks, 0.0), sumsq(chunks, 0.0);
  std::vector<long> cnt(chunks, 0);
  auto run_chunk = [&](int c) {
    Rng rng(mc.seed, 0x5eed0000ULL + std::uint64_t(c));
    const long lo = draws * c / chunks, hi = draws * (c + 1) / chunks;
    for (long i = lo; i < hi; ++i) {
      FellerSample s;
      do {
        s = sample_transition(1.0, tw, rng);
      } while (s.absorbed);
      const double tm = pre * std::pow(s.value, expo);
      const double x = std::exp(-2.0 / tm);
      sum[c] += x;
      sumsq[c] += x * x;
      ++cnt[c];
    }
  };
  const int workers = std::max(1, mc.workers);
  if (workers == 1) {
    for (int c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (int c = w; c < chunks; c += workers) run_chunk(c);
      });
    for (auto& t : pool) t.join();
  }
  double s = 0, ss = 0;
  long n = 0;
  for (int c = 0; c < chunks; ++c) {
    s += sum[c];
    ss += sumsq[c];
    n += cnt[c];
  }
  const double mean = s / n;
  const double var = std::max(0.0, (ss - n * mean * mean) / (n - 1));
  r.rho_M = mean;
  r.rho_M_stderr = std::sqrt(var / n);

  r.p_uW_failed = pf;
  r.p_uW_lost = (1 - pf) * (1 - r.rho_W) * r.rho_M;
  r.p_uM = (1 - pf) * r.rho_W;
  r.p_uC = (1 - pf) * (1 - r.rho_W) * (1 - r.rho_M);
  return r;
}

double xi_II_limit(const ModelParams& mp) { return upsilon(mp); }

double xi_IV_limit(const ModelParams& mp, double eta_iv) {
  const double a = mp.alpha, f = mp.f;
  const double H = solve_H(a, f);
  const double base = (1 + a * (1 + H)) / ((1 + a) * a * (1 + H));
  return std::sqrt(1.0 / ((1 - f) * mp.advantage())) / f * std::pow(base, H) * std::pow(eta_iv, a / H) *
         mp.kappa;
}

BottleneckScale xi_II(const ModelParams& mp, double p_TI, double v_TI, double T_I) {
  const double a = mp.alpha, f = mp.f, eps = mp.epsilon;
  const double delta = p_TI - (1 - f);
  if (!(delta > 0)) throw std::domain_error("xi_II: Stage II needs p(T_I) > 1-f");
  if (!(v_TI > 0)) throw std::domain_error("xi_II: v(T_I) must be > 0");
  BottleneckScale b;
  b.stage = Stage::II;
  b.s_star = eps * T_I + delta / (a * (1 - f) * p_TI);
  b.phi_or_psi_at_star = -(-delta / p_TI + std::log1p(delta / (1 - f))) / (a * eps);
  b.log_xi = 0.5 * std::log(1.0 / (a * (1 - f) * (1 - f))) - b.phi_or_psi_at_star -
             std::log(mp.V * v_TI * std::sqrt(eps));
  b.xi = std::exp(b.log_xi);
  if (mp.scaling == Scaling::Kappa) b.xi_limit = xi_II_limit(mp);
  return b;
}

BottleneckScale xi_IV(const ModelParams& mp, double p_TIII, double vstar_TIII, double T_III, double eta_iv) {
  const double a = mp.alpha, f = mp.f, eps = mp.epsilon, adv = mp.advantage();
  if (!(p_TIII < 1 - f) || !(p_TIII > 0)) throw std::domain_error("xi_IV: Stage IV needs 0 < p(T_III) < 1-f");
  if (!(vstar_TIII > 0)) throw std::domain_error("xi_IV: v*(T_III) must be > 0");
  const double g = 1 - (1 + a) * p_TIII;
  const double lr = std::log((1 - f) * g / (adv * p_TIII));
  BottleneckScale b;
  b.stage = Stage::IV;
  b.s_star = eps * T_III + lr;
  b.phi_or_psi_at_star = (std::log(g / adv) / (1 + a) - (1 - f) * lr) / eps;
  b.log_xi = 0.5 * std::log(1.0 / ((1 - f) * adv)) - b.phi_or_psi_at_star -
             std::log(mp.V * vstar_TIII * std::sqrt(eps));
  b.xi = std::exp(b.log_xi);
  if (mp.scaling == Scaling::Kappa) b.xi_limit = xi_IV_limit(mp, eta_iv);
  return b;
}

GeneticTimes t_genetic(const ModelParams& mp, GeneticCase c, Rng& rng, int steps) {
  GeneticTimes g;
  switch (c) {
    case GeneticCase::Failed: g.t1 = 0; return g;
    case GeneticCase::WildLost: g.t1 = std::numeric_limits<double>::infinity(); return g;
    case GeneticCase::MutantLost:
    case GeneticCase::Coexistence: break;
  }
  const double ups = upsilon(mp);
  PathIntegralOptions opt;
  opt.steps = steps;
  PathIntegral pi;
  for (int tries = 0;; ++tries) {
    pi = sample_path_integral(1.0, kSqrt2Pi, ups * (mp.k + 1), rng, opt);
    if (!pi.absorbed && !pi.resolution_failed) break;
    if (tries > 100000) throw std::runtime_error("t_genetic: could not draw a surviving w1 path");
  }
  g.t1 = ups * pi.value;
  g.eta_iv = pi.terminal;
  if (c == GeneticCase::Coexistence) g.t2 = std::numeric_limits<double>::infinity();
  return g;
}

}  // namespace escape
