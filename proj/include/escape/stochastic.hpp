#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "escape/core.hpp"
#include "escape/rng.hpp"

namespace escape {

struct SdeOptions {
  double dt = 1e-3;
  bool p_noise = false;
  // A coordinate is absorbed when a step leaves it at or below floor_cells / V
  // (or P for the predator). 0 absorbs only on reaching 0; 0.5 is "half a cell".
  double floor_cells = 0.0;
  // 1 is the model; 0 switches the noise off (infinite-population limit).
  double noise_scale = 1.0;
  // Keep every record_stride-th step (the final state is always kept).
  long record_stride = 1;
  bool stop_on_absorption = false;
  // Stop once vstar reaches this density (0 disables). Used when only the
  // failed-mutant question matters.
  double stop_vstar_above = 0.0;
  // Optional per-step observer, called with every state including unrecorded ones.
  std::function<void(const SystemState&)> observer;
};

struct SdePath {
  std::vector<double> times;
  std::vector<SystemState> states;
  double dt = 0;
  std::optional<double> absorbed_v, absorbed_vstar;
  bool p_noise_enabled = false;
  double sup_vstar = 0;  // over every step, not only the recorded ones
  double t_end = 0;      // time actually reached
};

// Largest accepted step. The predator moves on the 1/epsilon time scale and
// the prey on the unit scale, so dt is bounded by the prey dynamics.
constexpr double kMaxSdeDt = 0.05;

SdePath integrate_sde(const ModelParams& mp, const SystemState& u0, double t_end, Rng& rng,
                      const SdeOptions& opt = {});

struct Counts {
  long long v = 0, vstar = 0, p = 0;
};

struct BdOptions {
  bool genealogy = false;
  long long event_budget = 1'000'000'000LL;
  // Record a sample every record_dt time units (0 records every event).
  double record_dt = 0.0;
  bool stop_on_absorption = false;
  long long stop_vstar_at = 0;  // stop once N_vstar reaches this count (0 disables)
};

// One birth in the genealogy log. Individuals are numbered per type: the
// founders are 0..N0-1 and every birth appends the next id.
struct Birth {
  std::int32_t parent;
  double t;
};

struct Genealogy {
  long long founders = 0;
  std::vector<Birth> births;        // child id = founders + index
  std::vector<std::int32_t> alive;  // ids alive at the end of the path
};

struct BdPath {
  std::vector<double> times;
  std::vector<Counts> counts;
  double V = 0, P = 0;
  std::optional<double> absorbed_v, absorbed_vstar;
  long long sup_vstar = 0;
  long long events = 0;
  bool budget_exhausted = false;
  double t_end = 0;
  // Exact integrals of dt / N(t) for each prey type, sampled at `times`.
  // They stop growing once the type is absorbed.
  std::vector<double> inv_n_v, inv_n_vstar;
  std::optional<Genealogy> wild, mutant;
};

// Nondimensional per-cell rates (see README for the rescaling).
struct BdRates {
  double wild_birth, wild_death, mutant_birth, mutant_death, pred_birth, pred_death;
};
BdRates bd_rates(const ModelParams& mp, const Counts& c);

Counts initial_counts(const ModelParams& mp);

BdPath simulate_bd(const ModelParams& mp, const Counts& c0, double t_end, Rng& rng, const BdOptions& opt = {});

enum class OutcomeLabel { FailedMutant, MutantLostAfterRise, WildLost, Coexistence, Unresolved };
const char* to_string(OutcomeLabel l);
OutcomeLabel outcome_from_string(const std::string& s);

struct Outcome {
  OutcomeLabel label = OutcomeLabel::Unresolved;
  double t_resolved = 0;
  SystemState final_state;
};

// What classify_outcome needs from a path of either fidelity.
struct PathSummary {
  double sup_vstar = 0;
  std::optional<double> absorbed_v, absorbed_vstar;
  SystemState final_state;
  double t_end = 0;
  bool budget_exhausted = false;
};
PathSummary summarize(const SdePath& p);
PathSummary summarize(const BdPath& p);

// FailedMutant when sup vstar < eps (checked first), then WildLost when v is
// absorbed, MutantLostAfterRise when vstar is absorbed, Coexistence when the
// final state is within max-norm radius of u_C, else Unresolved.
Outcome classify_outcome(const PathSummary& s, const ModelParams& mp, double t_f, double coexistence_radius = 0.1);

}  // namespace escape
