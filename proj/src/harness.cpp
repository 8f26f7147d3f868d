#include "escape/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>
#include <thread>

#include "escape/csv.hpp"
#include "escape/deterministic.hpp"

namespace escape {

namespace {

// Auxiliary streams use different keys so they never overlap the path streams.
constexpr std::uint64_t kLineageKey = 0x4c494e4541474521ULL;
constexpr std::uint64_t kPredictKey = 0x5448454f52454d33ULL;

}  // namespace

const char* to_string(Fidelity f) {
  switch (f) {
    case Fidelity::Ode: return "ode";
    case Fidelity::Sde: return "sde";
    case Fidelity::Bd: return "bd";
  }
  return "?";
}

Fidelity fidelity_from_string(const std::string& s) {
  for (auto f : {Fidelity::Ode, Fidelity::Sde, Fidelity::Bd})
    if (s == to_string(f)) return f;
  throw std::invalid_argument("unknown fidelity: " + s);
}

const std::vector<OutcomeLabel>& all_outcomes() {
  static const std::vector<OutcomeLabel> v = {OutcomeLabel::FailedMutant, OutcomeLabel::MutantLostAfterRise,
                                              OutcomeLabel::WildLost, OutcomeLabel::Coexistence,
                                              OutcomeLabel::Unresolved};
  return v;
}

void validate(const ExperimentSpec& s) {
  validate(s.mp);
  if (s.n_paths < 1) throw std::invalid_argument("experiment: n_paths must be >= 1");
  if (!(s.t_factor > 0)) throw std::invalid_argument("experiment: t_factor must be > 0");
  if (!(s.dt > 0) || s.dt > kMaxSdeDt) throw std::invalid_argument("experiment: dt must lie in (0, 0.05]");
  if (s.sample_n < 0) throw std::invalid_argument("experiment: sample_n must be >= 0");
  if (s.workers < 1) throw std::invalid_argument("experiment: workers must be >= 1");
  if (!(s.coexistence_radius > 0)) throw std::invalid_argument("experiment: coexistence_radius must be > 0");
  if (s.floor_cells < 0) throw std::invalid_argument("experiment: floor_cells must be >= 0");
}

std::optional<double> predicted_mass(const OutcomeProbabilities& p, OutcomeLabel l) {
  switch (l) {
    case OutcomeLabel::FailedMutant: return p.p_uW_failed;
    case OutcomeLabel::MutantLostAfterRise: return p.p_uW_lost;
    case OutcomeLabel::WildLost: return p.p_uM;
    case OutcomeLabel::Coexistence: return p.p_uC;
    case OutcomeLabel::Unresolved: return std::nullopt;
  }
  return std::nullopt;
}

namespace {

struct PathResult {
  PathRecord rec;
  std::vector<PartitionRecord> parts;
};

bool theorem3_applies(const ModelParams& mp) {
  if (mp.scaling != Scaling::Kappa) return false;
  try {
    return std::abs(mp.f - solve_fhat(mp.alpha)) <= 1e-8;
  } catch (const std::exception&) {
    return false;
  }
}

// Number of wild samples when both types are present at the end.
int wild_share(int n, double v, double vs, Rng& rng) {
  if (vs <= 0) return n;
  if (v <= 0) return 0;
  std::binomial_distribution<int> bin(n, v / (v + vs));
  return bin(rng);
}

LineagePartition concat(int n, const std::vector<LineagePartition>& parts) {
  LineagePartition p;
  p.n = n;
  for (const auto& q : parts) p.blocks.insert(p.blocks.end(), q.blocks.begin(), q.blocks.end());
  return p;
}

void simulate_one(const ExperimentSpec& spec, long i, bool with_theorem3, PathResult& out) {
  const ModelParams& mp = spec.mp;
  const double t_f = spec.t_f();
  out.rec.replicate = i;
  Rng rng(spec.seed, std::uint64_t(i));
  Rng lin(spec.seed ^ kLineageKey, std::uint64_t(i));
  const int n = spec.sample_n;
  std::vector<double> times;
  std::vector<SystemState> states;
  PathSummary sum;

  if (spec.fidelity == Fidelity::Sde) {
    SdeOptions o;
    o.dt = spec.dt;
    o.p_noise = spec.p_noise;
    o.floor_cells = spec.floor_cells;
    o.stop_on_absorption = spec.stop_on_absorption;
    o.record_stride = n > 0 ? 1 : std::max(1L, std::lround(0.05 / spec.dt));
    SdePath path = integrate_sde(mp, initial_state(mp), t_f, rng, o);
    sum = summarize(path);
    out.rec.outcome = classify_outcome(sum, mp, t_f, spec.coexistence_radius);
    if (n > 0) {
      try {
        const SystemState& e = path.states.back();
        const int nw = wild_share(n, e.v, e.vstar, lin);
        std::vector<LineagePartition> ps;
        if (nw > 0) ps.push_back(track_lineages(path, mp, nw, Which::Wild, lin, spec.convention));
        if (n - nw > 0) ps.push_back(track_lineages(path, mp, n - nw, Which::Mutant, lin, spec.convention));
        out.parts.push_back({i, out.rec.outcome.label, "track_lineages", concat(n, ps)});
      } catch (const std::exception& ex) {
        out.rec.error = std::string("lineages: ") + ex.what();
      }
    }
    times = std::move(path.times);
    states = std::move(path.states);
  } else if (spec.fidelity == Fidelity::Bd) {
    BdOptions o;
    o.genealogy = n > 0;
    o.event_budget = spec.event_budget;
    o.record_dt = 0.05;
    o.stop_on_absorption = spec.stop_on_absorption;
    BdPath path = simulate_bd(mp, initial_counts(mp), t_f, rng, o);
    sum = summarize(path);
    out.rec.outcome = classify_outcome(sum, mp, t_f, spec.coexistence_radius);
    if (n > 0) {
      try {
        const Counts& c = path.counts.back();
        const int nw = wild_share(n, double(c.v), double(c.vstar), lin);
        if (nw > c.v || n - nw > c.vstar) throw std::runtime_error("fewer survivors than samples");
        std::vector<LineagePartition> g, t;
        if (nw > 0) {
          g.push_back(bd_genealogy(path, nw, Which::Wild, lin));
          t.push_back(track_lineages(path, mp, nw, Which::Wild, lin, spec.convention));
        }
        if (n - nw > 0) {
          g.push_back(bd_genealogy(path, n - nw, Which::Mutant, lin));
          t.push_back(track_lineages(path, mp, n - nw, Which::Mutant, lin, spec.convention));
        }
        out.parts.push_back({i, out.rec.outcome.label, "bd_genealogy", concat(n, g)});
        out.parts.push_back({i, out.rec.outcome.label, "track_lineages", concat(n, t)});
      } catch (const std::exception& ex) {
        out.rec.error = std::string("lineages: ") + ex.what();
      }
    }
    times = std::move(path.times);
    states.reserve(path.counts.size());
    for (std::size_t k = 0; k < path.counts.size(); ++k)
      states.push_back({double(path.counts[k].v) / path.V, double(path.counts[k].vstar) / path.V,
                        double(path.counts[k].p) / path.P, times[k]});
  } else {
    OdeTrajectory tr = integrate_ode(mp, initial_state(mp), t_f);
    sum.final_state = tr.states.back();
    sum.t_end = tr.times.back();
    for (const auto& s : tr.states) sum.sup_vstar = std::max(sum.sup_vstar, s.vstar);
    out.rec.outcome = classify_outcome(sum, mp, t_f, spec.coexistence_radius);
    auto det = detect_stages(tr, mp);
    if (!det.cycles.empty()) out.rec.first_cycle = det.cycles.front();
    out.rec.sup_vstar = sum.sup_vstar;
    return;
  }
  out.rec.sup_vstar = sum.sup_vstar;
  if (times.size() >= 2) {
    auto det = detect_stages_sampled(times, states, mp);
    if (!det.cycles.empty()) out.rec.first_cycle = det.cycles.front();
  }
  if (with_theorem3 && n > 0 && out.rec.outcome.label != OutcomeLabel::Unresolved) {
    Rng pr(spec.seed ^ kPredictKey, std::uint64_t(i));
    out.parts.push_back({i, out.rec.outcome.label, "theorem3", theorem3_predict(mp, out.rec.outcome.label, n, pr)});
  }
}

}  // namespace

CampaignSummary run_campaign(const ExperimentSpec& spec) {
  validate(spec);
  CampaignSummary s;
  try {
    MonteCarloOptions mc;
    mc.draws = spec.mc_draws;
    mc.seed = spec.seed;
    mc.workers = spec.workers;
    s.predicted = outcome_probs(spec.mp, mc);
  } catch (const std::exception& e) {
    s.prediction_note = e.what();
  }
  for (auto l : all_outcomes()) s.counts[l] = {0, 0};
  if (spec.dry_run) {
    if (!spec.out_dir.empty()) write_campaign(spec, s);
    return s;
  }

  const long n_paths = spec.fidelity == Fidelity::Ode ? 1 : spec.n_paths;
  const bool t3 = spec.fidelity != Fidelity::Ode && theorem3_applies(spec.mp);
  std::vector<PathResult> res(static_cast<std::size_t>(n_paths));
  std::atomic<long> next{0};
  auto work = [&] {
    for (long i; (i = next.fetch_add(1)) < n_paths;) {
      PathResult& r = res[std::size_t(i)];
      try {
        simulate_one(spec, i, t3, r);
      } catch (const std::exception& e) {
        r = PathResult{};
        r.rec.replicate = i;
        r.rec.outcome.label = OutcomeLabel::Unresolved;
        r.rec.error = e.what();
      }
    }
  };
  const int nw = int(std::min<long>(spec.workers, n_paths));
  if (nw <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nw; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  // aggregation in stream order
  s.n_paths = n_paths;
  for (auto l : all_outcomes()) s.counts[l] = {0, n_paths};
  const char* names[] = {"T_s", "T_I", "T_II", "T_III", "T_IV"};
  for (auto& r : res) {
    ++s.counts[r.rec.outcome.label].count;
    if (!r.rec.error.empty() && r.rec.outcome.label == OutcomeLabel::Unresolved) ++s.failed_paths;
    const StageTimes& st = r.rec.first_cycle;
    const double vals[] = {st.T_s, st.T_I, st.T_II, st.T_III, st.T_IV};
    for (int k = 0; k < 5; ++k)
      if (!std::isnan(vals[k])) {
        auto& [sum, cnt] = s.stage_means[names[k]];
        sum += vals[k];
        ++cnt;
      }
    s.paths.push_back(std::move(r.rec));
    for (auto& p : r.parts) s.partitions.push_back(std::move(p));
  }
  for (auto& [_, v] : s.stage_means) v.first /= double(v.second);

  // partition distribution test between the first two sources present
  std::vector<std::string> sources;
  for (const auto& p : s.partitions)
    if (std::find(sources.begin(), sources.end(), p.source) == sources.end()) sources.push_back(p.source);
  if (sources.size() >= 2) {
    std::map<std::string, long> a, b;
    for (const auto& p : s.partitions) {
      if (p.source == sources[0]) ++a[p.partition.signature()];
      if (p.source == sources[1]) ++b[p.partition.signature()];
    }
    s.tests.push_back({"partitions:" + sources[0] + "_vs_" + sources[1], chi2_homogeneity(a, b)});
  }
  if (!spec.out_dir.empty()) write_campaign(spec, s);
  return s;
}

void write_campaign(const ExperimentSpec& spec, const CampaignSummary& s) {
  ensure_dir(spec.out_dir);
  const std::string d = spec.out_dir + "/";
  {
    const ModelParams& mp = spec.mp;
    CsvWriter w(d + "params.csv", {"key", "value"});
    w.row({"alpha", fmt(mp.alpha)});
    w.row({"f", fmt(mp.f)});
    w.row({"epsilon", fmt(mp.epsilon)});
    w.row({"k", fmt(mp.k)});
    w.row({"kstar", fmt(mp.kstar)});
    w.row({"V", fmt(mp.V)});
    w.row({"scaling", to_string(mp.scaling)});
    w.row({"kappa", fmt(mp.kappa)});
    w.row({"beta", fmt(mp.beta)});
    w.row({"q", fmt(mp.q)});
    w.row({"m", fmt(mp.m)});
    w.row({"fidelity", to_string(spec.fidelity)});
    w.row({"n_paths", fmt((long long)spec.n_paths)});
    w.row({"t_factor", fmt(spec.t_factor)});
    w.row({"t_f", fmt(spec.t_f())});
    w.row({"dt", fmt(spec.dt)});
    w.row({"seed", std::to_string(spec.seed)});
    w.row({"sample_n", fmt((long long)spec.sample_n)});
    w.row({"floor_cells", fmt(spec.floor_cells)});
    w.row({"convention", to_string(spec.convention)});
    w.close();
  }
  {
    CsvWriter w(d + "summary.csv", {"quantity", "count", "n", "freq", "lo95", "hi95", "predicted", "z"});
    for (auto l : all_outcomes()) {
      const Proportion& p = s.counts.at(l);
      std::string pred, z;
      if (s.predicted) {
        if (auto m = predicted_mass(*s.predicted, l)) {
          pred = fmt(*m);
          if (p.n > 0) z = fmt(z_score(p.count, p.n, *m));
        }
      }
      w.row({to_string(l), fmt((long long)p.count), fmt((long long)p.n), fmt(p.freq()), fmt(p.lo95()), fmt(p.hi95()),
             pred, z});
    }
    w.close();
  }
  if (s.predicted) {
    write_predictor_report(d + "predictions.csv", spec.mp, *s.predicted);
  } else {
    CsvWriter w(d + "predictions.csv", predictor_report_header());
    w.close();
    std::ofstream note(d + "prediction_note.txt");
    note << s.prediction_note << "\n";
  }
  {
    CsvWriter w(d + "tests.csv", {"name", "statistic", "p_value", "dof"});
    for (const auto& t : s.tests)
      w.row({t.name, fmt(t.result.statistic), fmt(t.result.p_value), fmt((long long)t.result.dof)});
    w.close();
  }
  if (spec.dry_run) return;
  {
    CsvWriter w(d + "outcomes.csv", {"replicate", "label", "t_resolved", "v", "vstar", "p", "sup_vstar", "error"});
    for (const auto& r : s.paths) {
      std::string err = r.error;
      for (char& c : err)
        if (c == ',' || c == '\n') c = ';';
      const auto& f = r.outcome.final_state;
      w.row({fmt((long long)r.replicate), to_string(r.outcome.label), fmt(r.outcome.t_resolved), fmt(f.v),
             fmt(f.vstar), fmt(f.p), fmt(r.sup_vstar), err});
    }
    w.close();
  }
  {
    CsvWriter w(d + "stage_times.csv", {"replicate", "cycle", "T_s", "T_I", "T_II", "T_III", "T_IV"});
    for (const auto& r : s.paths) {
      const auto& c = r.first_cycle;
      w.row({fmt((long long)r.replicate), fmt((long long)c.cycle), fmt(c.T_s), fmt(c.T_I), fmt(c.T_II), fmt(c.T_III),
             fmt(c.T_IV)});
    }
    w.close();
  }
  if (!s.partitions.empty()) {
    CsvWriter w(d + "partitions.csv", {"replicate", "case", "n", "n0", "blocks", "source"});
    for (const auto& p : s.partitions)
      w.row({fmt((long long)p.replicate), to_string(p.outcome), fmt((long long)p.partition.n),
             fmt((long long)p.partition.n0()), p.partition.blocks_string(), p.source});
    w.close();
  }
}

const std::vector<std::string>& predictor_report_header() {
  static const std::vector<std::string> h = {"alpha", "f", "regime", "phi_lim", "psi_lim", "H", "p_failed",
                                             "rho_W", "rho_M", "rho_M_stderr", "P_uW_failed", "P_uW_lost",
                                             "P_uM", "P_uC"};
  return h;
}

void write_predictor_report(const std::string& path, const ModelParams& mp, const OutcomeProbabilities& p) {
  // rho columns stay empty outside kappa mode
  const bool kappa = mp.scaling == Scaling::Kappa;
  auto rho = [&](double x) { return kappa ? fmt(x) : std::string(); };
  CsvWriter w(path, predictor_report_header());
  w.row({fmt(mp.alpha), fmt(mp.f), to_string(p.regime), fmt(p.phi_lim), fmt(p.psi_lim), fmt(p.H), fmt(p.p_failed),
         rho(p.rho_W), rho(p.rho_M), rho(p.rho_M_stderr), fmt(p.p_uW_failed), fmt(p.p_uW_lost), fmt(p.p_uM),
         fmt(p.p_uC)});
  w.close();
}

CampaignSummary read_summary(const std::string& dir) {
  CampaignSummary s;
  const CsvTable t = read_csv(dir + "/summary.csv");
  const auto cq = t.col("quantity"), cc = t.col("count"), cn = t.col("n"), cp = t.col("predicted");
  OutcomeProbabilities pr;
  bool any_pred = false;
  for (const auto& r : t.rows) {
    const OutcomeLabel l = outcome_from_string(r[cq]);
    s.counts[l] = {std::stol(r[cc]), std::stol(r[cn])};
    s.n_paths = std::stol(r[cn]);
    if (!r[cp].empty()) {
      any_pred = true;
      const double m = std::stod(r[cp]);
      switch (l) {
        case OutcomeLabel::FailedMutant: pr.p_uW_failed = m; break;
        case OutcomeLabel::MutantLostAfterRise: pr.p_uW_lost = m; break;
        case OutcomeLabel::WildLost: pr.p_uM = m; break;
        case OutcomeLabel::Coexistence: pr.p_uC = m; break;
        case OutcomeLabel::Unresolved: break;
      }
    }
  }
  if (any_pred) s.predicted = pr;
  const CsvTable tt = read_csv(dir + "/tests.csv");
  for (const auto& r : tt.rows)
    s.tests.push_back({r[tt.col("name")],
                       {std::stod(r[tt.col("statistic")]), std::stod(r[tt.col("p_value")]), std::stoi(r[tt.col("dof")])}});
  return s;
}

CompareReport compare(const CampaignSummary& s) {
  CompareReport rep;
  if (s.predicted) {
    for (auto l : all_outcomes()) {
      auto m = predicted_mass(*s.predicted, l);
      auto it = s.counts.find(l);
      if (!m || it == s.counts.end() || it->second.n == 0) continue;
      const double z = z_score(it->second.count, it->second.n, *m);
      rep.rows.push_back({to_string(l), "z", z, std::abs(z) <= 3.0});
    }
  }
  for (const auto& t : s.tests) rep.rows.push_back({t.name, "p", t.result.p_value, t.result.p_value >= 0.01});
  for (const auto& r : rep.rows) rep.pass = rep.pass && r.pass;
  return rep;
}

}  // namespace escape
