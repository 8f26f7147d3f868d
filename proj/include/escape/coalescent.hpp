#pragma once

#include <limits>
#include <string>
#include <vector>

#include "escape/asymptotics.hpp"
#include "escape/core.hpp"
#include "escape/rng.hpp"
#include "escape/stochastic.hpp"

namespace escape {

struct LineagePartition {
  int n = 0;
  std::vector<int> blocks;  // descending, except wild-first concatenation in theorem3_predict
  int n0() const { return int(blocks.size()); }
  // "n0|b1;b2;..." used as a categorical label in distribution tests.
  std::string signature() const;
  std::string blocks_string() const;  // "b1;b2;..." sorted descending
};

struct KingmanResult {
  LineagePartition partition;
  double duration = 0;
  // Block membership of the original samples 0..n-1 (block index per sample).
  std::vector<int> member;
  // First merged pair (smaller label first), or (-1,-1) when no merge happened.
  int first_a = -1, first_b = -1;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

// Kingman coalescent with unit pair rate run for time t (t may be +inf).
KingmanResult kingman_sample(int n, double t, Rng& rng);

enum class Which { Wild, Mutant };
const char* to_string(Which w);

// Pair merge hazard per unit of the lineage clock tau = int dt / (V x(t)).
//  BirthExact: twice the per-cell birth rate, (k+1) for wild and (k*+f) for
//    mutant; the exact pair rate of the birth-death model.
//  UnitPair: 1, Kingman at unit pair rate over tau.
//  TotalRate: 2, total rate n'(n'-1)/(V x) over n'(n'-1)/2 pairs.
enum class RateConvention { BirthExact, UnitPair, TotalRate };
const char* to_string(RateConvention c);
RateConvention rate_convention_from_string(const std::string& s);
double pair_rate(const ModelParams& mp, Which which, RateConvention c);

// Lineage clock accumulated over a sampled path, trapezoid rule in time.
// Throws if the tracked type is absorbed or drops below half a cell.
double lineage_clock(const SdePath& path, const ModelParams& mp, Which which);
// Exact clock from a birth-death path: int dt / N(t) on [0, t_end].
double lineage_clock(const BdPath& path, Which which);

// Backward lineage tracking: a time-inhomogeneous Kingman coalescent with
// pair hazard pair_rate / (V x(t)) is the unit-rate coalescent run for
// pair_rate * lineage_clock.
LineagePartition track_lineages(const SdePath& path, const ModelParams& mp, int n, Which which, Rng& rng,
                                RateConvention conv = RateConvention::BirthExact);
LineagePartition track_lineages(const BdPath& path, const ModelParams& mp, int n, Which which, Rng& rng,
                                RateConvention conv = RateConvention::BirthExact);

// Samples n distinct individuals alive at the end of the path and groups them
// by their founder at time 0.
LineagePartition bd_genealogy(const BdPath& path, int n, Which which, Rng& rng);

// Lineage distribution in the large-V limit for an outcome under kappa
// scaling at f_hat. Unresolved and MutantLostAfterRise use the wild-type
// rows; coexistence concatenates the wild part and the fully coalesced mutant part.
LineagePartition theorem3_predict(const ModelParams& mp, OutcomeLabel outcome, int n, Rng& rng,
                                  int steps = 10000);

GeneticCase genetic_case(OutcomeLabel l);

}  // namespace escape
