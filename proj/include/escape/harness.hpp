#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "escape/asymptotics.hpp"
#include "escape/coalescent.hpp"
#include "escape/core.hpp"
#include "escape/deterministic.hpp"
#include "escape/stats.hpp"
#include "escape/stochastic.hpp"

namespace escape {

enum class Fidelity { Ode, Sde, Bd };
const char* to_string(Fidelity f);
Fidelity fidelity_from_string(const std::string& s);

struct ExperimentSpec {
  ModelParams mp;
  Fidelity fidelity = Fidelity::Sde;
  long n_paths = 100;
  double t_factor = 1.0;  // t_f = t_factor / eps^2
  double dt = 1e-3;
  int sample_n = 0;  // lineage sample size; 0 skips lineage work
  std::uint64_t seed = 1;
  std::string out_dir;  // empty writes nothing
  int workers = 1;
  bool dry_run = false;  // predictions only
  double coexistence_radius = 0.1;
  double floor_cells = 0.0;
  bool p_noise = false;
  bool stop_on_absorption = true;
  RateConvention convention = RateConvention::BirthExact;
  long long event_budget = 1'000'000'000LL;
  long mc_draws = 20000;  // rho_M draws for kappa-mode predictions

  double t_f() const { return t_factor / (mp.epsilon * mp.epsilon); }
};

// Throws std::invalid_argument naming the offending field.
void validate(const ExperimentSpec& spec);

struct PathRecord {
  long replicate = 0;
  Outcome outcome;
  double sup_vstar = 0;
  StageTimes first_cycle;  // NaN entries when a stage was not reached
  std::string error;       // non-empty when the path failed; outcome is then Unresolved
};

struct PartitionRecord {
  long replicate = 0;
  OutcomeLabel outcome = OutcomeLabel::Unresolved;
  std::string source;  // "track_lineages", "bd_genealogy" or "theorem3"
  LineagePartition partition;
};

struct NamedTest {
  std::string name;
  TestResult result;
};

struct CampaignSummary {
  long n_paths = 0;
  std::map<OutcomeLabel, Proportion> counts;
  std::optional<OutcomeProbabilities> predicted;
  std::string prediction_note;  // why predictions are missing, if they are
  long failed_paths = 0;
  // Mean stage times of the first cycle over the paths that reached each stage.
  std::map<std::string, std::pair<double, long>> stage_means;
  std::vector<NamedTest> tests;
  std::vector<PathRecord> paths;
  std::vector<PartitionRecord> partitions;
};

// Predicted mass for each resolved outcome label (Unresolved has none).
std::optional<double> predicted_mass(const OutcomeProbabilities& p, OutcomeLabel l);

// Simulates paths (seed, 0..n_paths-1), classifies them, computes the
// predictions once and writes the CSVs when out_dir is set. Per-path failures
// are recorded and never abort the campaign. Output is independent of workers.
CampaignSummary run_campaign(const ExperimentSpec& spec);

// One-row predictor report: alpha, f, regime, phi_lim, psi_lim, H, p_failed,
// rho_W, rho_M, rho_M_stderr, P_uW_failed, P_uW_lost, P_uM, P_uC.
const std::vector<std::string>& predictor_report_header();
void write_predictor_report(const std::string& path, const ModelParams& mp, const OutcomeProbabilities& p);

void write_campaign(const ExperimentSpec& spec, const CampaignSummary& s);
// Reads summary.csv and tests.csv from a campaign directory.
CampaignSummary read_summary(const std::string& dir);

struct CompareRow {
  std::string quantity;
  std::string kind;  // "z" or "p"
  double value = 0;
  bool pass = true;
};

struct CompareReport {
  std::vector<CompareRow> rows;
  bool pass = true;
};

// PASS when every |z| <= 3 and every p >= 0.01.
CompareReport compare(const CampaignSummary& s);

const std::vector<OutcomeLabel>& all_outcomes();

}  // namespace escape
