#pragma once

#include <array>
#include <map>
#include <string>

namespace escape {

// Per-cell rates and interaction coefficients in physical units.
struct DimensionalParams {
  double k = 1, dk = 1;          // wild-type baseline turnover and net growth
  double kstar = 1, dkstar = 1;  // mutant analogues
  double h = 1;                  // predator baseline turnover
  double a = 1, b = 1, c = 1, d = 1;
};

enum class Scaling { FixedEpsilon, Beta, Kappa };

const char* to_string(Scaling s);

// Nondimensional model parameters. Build through make_params() or
// params_from_config(), which resolve epsilon from the scaling mode and
// enforce the standing assumption f - alpha(1-f) > 0.
struct ModelParams {
  double alpha = 1.0;
  double f = 0.8;
  double epsilon = 0.01;
  double k = 1.0;
  double kstar = 1.0;
  double V = 1e6;
  double kappa = 1.0;
  double beta = 0.0;
  double q = 4.0;
  double m = 0.6;
  double h = 1.0;  // predator turnover, only used by the optional p-noise and the BD model
  double P = 0.0;  // predator population scale; 0 means "same as V"
  Scaling scaling = Scaling::FixedEpsilon;

  double predator_scale() const { return P > 0 ? P : V; }
  // f - alpha(1-f), the mutant's advantage over the wild-type equilibrium.
  double advantage() const { return f - alpha * (1.0 - f); }
  double threshold() const;  // epsilon^q
};

struct NondimResult {
  ModelParams mp;
  double T = 0, V = 0, P = 0;  // implied scales
};

// Throws std::invalid_argument when mp violates any invariant.
void validate(const ModelParams& mp);

// Fills epsilon from beta or kappa according to mp.scaling, then validates.
ModelParams make_params(ModelParams mp);

NondimResult nondimensionalize(const DimensionalParams& dp);

struct SystemState {
  double v = 0, vstar = 0, p = 0, t = 0;
};

struct Equilibria {
  SystemState u_W, u_M, u_C;
};

Equilibria equilibria(const ModelParams& mp);
SystemState initial_state(const ModelParams& mp);

// Right-hand side of the deterministic system in (v, vstar, p).
std::array<double, 3> drift(const ModelParams& mp, double v, double vstar, double p);

double max_norm_distance(const SystemState& a, const SystemState& b);

// key=value text, '#' starts a comment. Unknown keys are rejected.
using Config = std::map<std::string, std::string>;
Config parse_config(const std::string& text);
Config read_config_file(const std::string& path);
// Exactly one of epsilon / beta / kappa must be present. `seed` is returned
// separately since it is not a model parameter.
ModelParams params_from_config(const Config& cfg, unsigned long long* seed = nullptr);

}  // namespace escape
