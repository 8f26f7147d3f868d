#include "escape/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "escape/asymptotics.hpp"

namespace escape {

const char* to_string(Scaling s) {
  switch (s) {
    case Scaling::FixedEpsilon: return "epsilon";
    case Scaling::Beta: return "beta";
    case Scaling::Kappa: return "kappa";
  }
  return "?";
}

double ModelParams::threshold() const { return std::pow(epsilon, q); }

void validate(const ModelParams& mp) {
  auto bad = [](const std::string& what) { throw std::invalid_argument("invalid parameters: " + what); };
  if (!(mp.alpha > 0)) bad("alpha must be > 0");
  if (!(mp.f > 0 && mp.f < 1)) bad("f must lie in (0,1)");
  if (!(mp.advantage() > 0)) bad("f - alpha(1-f) must be > 0");
  if (!(mp.epsilon > 0) || !std::isfinite(mp.epsilon)) bad("epsilon must be > 0");
  if (!(mp.V >= 1)) bad("V must be >= 1");
  if (!(mp.m > 0.5 && mp.m < 2.0 / 3.0)) bad("m must lie in (1/2, 2/3)");
  if (!(mp.q >= 1)) bad("q must be >= 1");
  if (!(mp.k >= 1)) bad("k must be >= 1 (death rate (k-1)/2 >= 0)");
  if (!(mp.kstar >= mp.f)) bad("kstar must be >= f (death rate (kstar-f)/2 >= 0)");
  if (!(mp.h >= 0)) bad("h must be >= 0");
  if (!(mp.P >= 0)) bad("P must be >= 0");
  if (mp.scaling == Scaling::Kappa && !(mp.kappa > 0)) bad("kappa must be > 0");
  if (mp.scaling == Scaling::Beta && !(mp.beta > 0)) bad("beta must be > 0");
}

ModelParams make_params(ModelParams mp) {
  if (!(mp.alpha > 0) || !(mp.f > 0 && mp.f < 1) || !(mp.advantage() > 0)) validate(mp);
  switch (mp.scaling) {
    case Scaling::FixedEpsilon: break;
    case Scaling::Beta:
      if (!(mp.beta > 0)) throw std::invalid_argument("invalid parameters: beta must be > 0");
      if (!(mp.V > 1)) throw std::invalid_argument("invalid parameters: beta scaling needs V > 1");
      mp.epsilon = mp.beta / std::log(mp.V);
      break;
    case Scaling::Kappa:
      mp.epsilon = epsilon_of_V(phi_lim(mp.alpha, mp.f), mp.kappa, mp.V);
      break;
  }
  validate(mp);
  return mp;
}

NondimResult nondimensionalize(const DimensionalParams& dp) {
  if (!(dp.dk > 0)) throw std::invalid_argument("nondimensionalize: dk must be > 0");
  if (!(dp.c > 0)) throw std::invalid_argument("nondimensionalize: c must be > 0");
  if (!(dp.a > 0)) throw std::invalid_argument("nondimensionalize: a must be > 0");
  if (!(dp.k > 0 && dp.kstar > 0 && dp.dkstar > 0 && dp.h > 0 && dp.b > 0 && dp.d > 0))
    throw std::invalid_argument("nondimensionalize: rates must be > 0");
  if (dp.dk > dp.k || dp.dkstar > dp.kstar)
    throw std::invalid_argument("nondimensionalize: net growth exceeds turnover");
  NondimResult r;
  r.T = 1.0 / dp.dk;
  r.V = 1.0 / (dp.c * r.T);
  r.P = 1.0 / (dp.a * r.T);
  ModelParams& mp = r.mp;
  mp.k = dp.k / dp.dk;
  mp.kstar = dp.kstar / dp.dk;
  mp.f = dp.dkstar / dp.dk;
  mp.epsilon = dp.b / dp.c;
  mp.alpha = dp.d / dp.a;
  // the predator noise term reads eps*p*(h~ + v + alpha p)/P, so h~ = h T / eps
  mp.h = dp.h * r.T / mp.epsilon;
  mp.V = r.V;
  mp.P = r.P;
  mp.scaling = Scaling::FixedEpsilon;
  return r;
}

Equilibria equilibria(const ModelParams& mp) {
  const double a = mp.alpha, f = mp.f;
  Equilibria e;
  e.u_W = {a / (1 + a), 0.0, 1.0 / (1 + a), 0.0};
  e.u_M = {0.0, f, 0.0, 0.0};
  e.u_C = {a * (1 - f), f - a * (1 - f), 1 - f, 0.0};
  return e;
}

SystemState initial_state(const ModelParams& mp) {
  return {mp.alpha / (1 + mp.alpha), 1.0 / mp.V, 1.0 / (1 + mp.alpha), 0.0};
}

std::array<double, 3> drift(const ModelParams& mp, double v, double vstar, double p) {
  return {v * (1 - p - v - vstar), vstar * (mp.f - v - vstar), mp.epsilon * p * (v - mp.alpha * p)};
}

double max_norm_distance(const SystemState& a, const SystemState& b) {
  return std::max({std::abs(a.v - b.v), std::abs(a.vstar - b.vstar), std::abs(a.p - b.p)});
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw std::invalid_argument("config: bad number for '" + key + "': " + v);
  return x;
}

const char* kKnownKeys[] = {"alpha", "f", "k", "kstar", "V", "q", "m", "seed", "epsilon", "beta", "kappa", "h", "P"};

}  // namespace

Config parse_config(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (std::find(std::begin(kKnownKeys), std::end(kKnownKeys), key) == std::end(kKnownKeys))
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    cfg[key] = val;
  }
  return cfg;
}

Config read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ModelParams params_from_config(const Config& cfg, unsigned long long* seed) {
  ModelParams mp;
  auto get = [&](const char* key, double& dst) {
    if (auto it = cfg.find(key); it != cfg.end()) dst = to_double(key, it->second);
  };
  get("alpha", mp.alpha);
  if (auto it = cfg.find("f"); it != cfg.end()) {
    // "fhat" selects the boundary fitness where phi_lim = psi_lim
    mp.f = it->second == "fhat" ? solve_fhat(mp.alpha) : to_double("f", it->second);
  }
  get("k", mp.k);
  get("kstar", mp.kstar);
  get("V", mp.V);
  get("q", mp.q);
  get("m", mp.m);
  get("h", mp.h);
  get("P", mp.P);
  const int modes = int(cfg.count("epsilon")) + int(cfg.count("beta")) + int(cfg.count("kappa"));
  if (modes != 1) throw std::invalid_argument("config: exactly one of epsilon, beta, kappa is required");
  if (cfg.count("epsilon")) {
    mp.scaling = Scaling::FixedEpsilon;
    get("epsilon", mp.epsilon);
  } else if (cfg.count("beta")) {
    mp.scaling = Scaling::Beta;
    get("beta", mp.beta);
  } else {
    mp.scaling = Scaling::Kappa;
    get("kappa", mp.kappa);
  }
  if (seed) {
    *seed = 1;
    if (auto it = cfg.find("seed"); it != cfg.end()) {
      std::size_t pos = 0;
      try {
        *seed = std::stoull(it->second, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != it->second.size()) throw std::invalid_argument("config: bad seed " + it->second);
    }
  }
  return make_params(mp);
}

}  // namespace escape
