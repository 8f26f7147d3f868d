#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "escape/core.hpp"
#include "escape/rng.hpp"

namespace escape {

// Limit exponents governing wild-type (phi) and mutant (psi) bottleneck depth.
double phi_lim(double alpha, double f);
// Positive root of (1-f) H = (1/alpha) log(1 + alpha H / (1+alpha)).
double solve_H(double alpha, double f);
double psi_lim(double alpha, double f);
// The f in (alpha/(1+alpha), 1) where phi_lim = psi_lim.
double solve_fhat(double alpha);

struct LimitFunctions {
  double phi_lim = 0, psi_lim = 0, H = 0;
  std::optional<double> f_hat;
};
LimitFunctions limit_functions(double alpha, double f, bool with_fhat = false);

// Critical scaling of epsilon with V. Requires V > e^e.
double epsilon_of_V(double phi, double kappa, double V);

double p_failed(double alpha, double f, double kstar);

double t_wild(const ModelParams& mp);
double t_mutant(const ModelParams& mp, double eta_iv);
double rho_wild(const ModelParams& mp);
// Upsilon = sqrt(1/(alpha (1-f)^2)) alpha/(1+alpha) kappa.
double upsilon(const ModelParams& mp);

enum class Regime { Thm1Case1, Thm1Case2, Thm1Case3, Thm2Critical };
const char* to_string(Regime r);

struct OutcomeProbabilities {
  Regime regime = Regime::Thm1Case1;
  double phi_lim = 0, psi_lim = 0, H = 0;
  double p_failed = 0;
  double rho_W = 0, rho_M = 0, rho_M_stderr = 0;  // kappa mode only
  double p_uW_failed = 0, p_uW_lost = 0, p_uM = 0, p_uC = 0;
  double total() const { return p_uW_failed + p_uW_lost + p_uM + p_uC; }
};

struct MonteCarloOptions {
  long draws = 100000;
  std::uint64_t seed = 1;
  int workers = 1;
};

// Beta and fixed-epsilon modes use the regime table with beta = epsilon log V;
// kappa mode uses the critical-scaling products and requires f = f_hat.
OutcomeProbabilities outcome_probs(const ModelParams& mp, const MonteCarloOptions& mc = {});

enum class Stage { I, II, III, IV };
const char* to_string(Stage s);

struct BottleneckScale {
  Stage stage = Stage::II;
  double xi = 0;
  double log_xi = 0;
  double s_star = 0;             // s_II or s_IV (slow time)
  double phi_or_psi_at_star = 0;  // phi(s_II/eps) or psi(s_IV/eps)
  std::optional<double> xi_limit;
};

// v_TI is the wild density entering Stage II (epsilon^q on the nominal path).
BottleneckScale xi_II(const ModelParams& mp, double p_TI, double v_TI, double T_I = 0);
// vstar_TIII is the mutant density entering Stage IV; eta_iv feeds the limit value.
BottleneckScale xi_IV(const ModelParams& mp, double p_TIII, double vstar_TIII, double T_III = 0,
                      double eta_iv = 1.0);
double xi_II_limit(const ModelParams& mp);
double xi_IV_limit(const ModelParams& mp, double eta_iv);

enum class GeneticCase { Failed, WildLost, MutantLost, Coexistence };
const char* to_string(GeneticCase c);

struct GeneticTimes {
  double t1 = 0;
  std::optional<double> t2;
  double eta_iv = 0;  // w1 at T_wild for the surviving-wild cases
};

// Draws the Kingman durations for the given case. In the surviving-wild
// cases w1 is conditioned on survival to T_wild.
GeneticTimes t_genetic(const ModelParams& mp, GeneticCase c, Rng& rng, int steps = 10000);

}  // namespace escape
