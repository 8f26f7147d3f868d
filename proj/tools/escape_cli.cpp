// Command-line front end: escape <subcommand> [flags]
// Exit codes: 0 success / PASS, 1 usage or input error, 2 comparison FAIL.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include "escape/asymptotics.hpp"
#include "escape/coalescent.hpp"
#include "escape/core.hpp"
#include "escape/csv.hpp"
#include "escape/deterministic.hpp"
#include "escape/harness.hpp"
#include "escape/stochastic.hpp"

using namespace escape;

namespace {

struct ModelFlags {
  std::string config;
  std::map<std::string, std::string> values;

  void add(CLI::App* app) {
    app->set_help_flag("--help", "print this help");  // -h would clash with the model key h
    app->add_option("--config", config, "key=value parameter file; flags override it");
    for (const char* key : {"alpha", "f", "k", "kstar", "V", "q", "m", "seed", "epsilon", "beta", "kappa", "h", "P"})
      app->add_option(std::string("--") + key, values[key], std::string("model parameter ") + key);
  }

  Config merged() const {
    Config cfg = config.empty() ? Config{} : read_config_file(config);
    bool scaling_flag = false;
    for (const char* s : {"epsilon", "beta", "kappa"}) scaling_flag = scaling_flag || !values.at(s).empty();
    if (scaling_flag)
      for (const char* s : {"epsilon", "beta", "kappa"}) cfg.erase(s);
    for (const auto& [k, v] : values)
      if (!v.empty()) cfg[k] = v;
    if (!cfg.count("epsilon") && !cfg.count("beta") && !cfg.count("kappa")) cfg["epsilon"] = "0.01";
    return cfg;
  }

  ModelParams params(unsigned long long* seed) const { return make_params(params_from_config(merged(), seed)); }
};

std::string default_out() {
  const char* e = std::getenv("ESCAPE_OUT_DIR");
  return e && *e ? e : "out";
}

void print_prediction(const ModelParams& mp, const OutcomeProbabilities& p) {
  std::cout << "epsilon=" << fmt(mp.epsilon) << " V=" << fmt(mp.V) << " scaling=" << to_string(mp.scaling) << "\n"
            << "regime=" << to_string(p.regime) << " phi_lim=" << fmt(p.phi_lim) << " psi_lim=" << fmt(p.psi_lim)
            << " p_failed=" << fmt(p.p_failed) << "\n"
            << "P(u_W,failed)=" << fmt(p.p_uW_failed) << " P(u_W,lost)=" << fmt(p.p_uW_lost)
            << " P(u_M)=" << fmt(p.p_uM) << " P(u_C)=" << fmt(p.p_uC) << "\n";
  if (mp.scaling == Scaling::Kappa)
    std::cout << "rho_W=" << fmt(p.rho_W) << " rho_M=" << fmt(p.rho_M) << " (stderr " << fmt(p.rho_M_stderr)
              << ") T_wild=" << fmt(t_wild(mp)) << " Xi_II_limit=" << fmt(xi_II_limit(mp)) << "\n";
}

int write_figures_data(const std::string& dir) {
  ensure_dir(dir);
  // fig1: full damped oscillation at eps = 0.01
  ModelParams mp;
  mp.epsilon = 0.01;
  mp = make_params(mp);
  {
    auto tr = integrate_ode(mp, initial_state(mp), 1.0 / (mp.epsilon * mp.epsilon));
    write_trajectory_csv(dir + "/fig1_trajectory.csv", tr.times, tr.states);
  }
  // fig2: first cycle with all four stage times; q = 2 so that vstar's
  // bottleneck crosses the threshold at a desk-scale epsilon
  {
    ModelParams m2 = mp;
    m2.epsilon = 0.005;
    m2.q = 2;
    m2 = make_params(m2);
    auto tr = integrate_ode(m2, initial_state(m2), 6000);
    auto det = detect_stages(tr, m2);
    write_trajectory_csv(dir + "/fig2_trajectory.csv", tr.times, tr.states);
    write_stage_times_csv(dir + "/fig2_stage_times.csv", det);
  }
  // fig3: limit functions over f
  {
    CsvWriter w(dir + "/fig3_limits.csv", {"f", "phi_lim", "psi_lim"});
    const double lo = 0.5, hi = 0.995;
    for (int i = 1; i <= 200; ++i) {
      const double f = lo + (hi - lo) * i / 200.0;
      w.row({fmt(f), fmt(phi_lim(1.0, f)), fmt(psi_lim(1.0, f))});
    }
    w.close();
    CsvWriter m(dir + "/fig3_markers.csv", {"name", "value"});
    const double fh = solve_fhat(1.0);
    m.row({"alpha", "1"});
    m.row({"f_hat", fmt(fh)});
    m.row({"phi_at_f_hat", fmt(phi_lim(1.0, fh))});
    m.close();
  }
  std::cout << "wrote figure data to " << dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predator-prey immune escape laboratory"};
  app.require_subcommand(1);

  // ode
  auto* ode = app.add_subcommand("ode", "integrate the deterministic system and detect stage times");
  ModelFlags ode_m;
  ode_m.add(ode);
  double ode_tend = 0, ode_tol = 1e-10;
  std::string ode_out = default_out();
  ode->add_option("--t-end", ode_tend, "end time (default 1/eps^2)");
  ode->add_option("--tol", ode_tol, "error per unit step");
  ode->add_option("--out", ode_out, "output directory");

  // sde
  auto* sde = app.add_subcommand("sde", "one Euler-Maruyama path");
  ModelFlags sde_m;
  sde_m.add(sde);
  double sde_tend = 0, sde_dt = 1e-3, sde_floor = 0;
  long sde_stride = 10;
  bool sde_pnoise = false;
  std::string sde_out = default_out();
  sde->add_option("--t-end", sde_tend, "end time (default 1/eps^2)");
  sde->add_option("--dt", sde_dt, "fixed step");
  sde->add_option("--floor-cells", sde_floor, "absorption floor in cells");
  sde->add_option("--stride", sde_stride, "record every n-th step");
  sde->add_flag("--p-noise", sde_pnoise, "enable predator noise");
  sde->add_option("--out", sde_out, "output directory");

  // bd
  auto* bd = app.add_subcommand("bd", "one exact birth-death path");
  ModelFlags bd_m;
  bd_m.add(bd);
  double bd_tend = 0, bd_rec = 0.1;
  bool bd_gen = false;
  long long bd_budget = 1'000'000'000LL;
  std::string bd_out = default_out();
  bd->add_option("--t-end", bd_tend, "end time (default 1/eps^2)");
  bd->add_option("--record-dt", bd_rec, "sampling interval (0 = every event)");
  bd->add_option("--event-budget", bd_budget, "maximum number of events");
  bd->add_flag("--genealogy", bd_gen, "record parents of every birth");
  bd->add_option("--out", bd_out, "output directory");

  // predict
  auto* pred = app.add_subcommand("predict", "closed-form and Monte Carlo predictions");
  ModelFlags pred_m;
  pred_m.add(pred);
  long pred_draws = 100000;
  int pred_workers = 1;
  pred->add_option("--draws", pred_draws, "Monte Carlo draws for rho_M");
  pred->add_option("--workers", pred_workers, "threads");
  std::string pred_out;
  pred->add_option("--out", pred_out, "also write predictor_report.csv here");

  // campaign
  auto* camp = app.add_subcommand("campaign", "Monte Carlo campaign with CSV output");
  ModelFlags camp_m;
  camp_m.add(camp);
  ExperimentSpec spec;
  std::string camp_fid = "sde", camp_conv = "birth_exact";
  spec.out_dir = default_out();
  camp->add_option("--fidelity", camp_fid, "ode, sde or bd");
  camp->add_option("--paths", spec.n_paths, "number of paths");
  camp->add_option("--t-factor", spec.t_factor, "t_f = t_factor / eps^2");
  camp->add_option("--dt", spec.dt, "SDE step");
  camp->add_option("--sample-n", spec.sample_n, "lineage sample size");
  camp->add_option("--workers", spec.workers, "threads");
  camp->add_option("--floor-cells", spec.floor_cells, "SDE absorption floor in cells");
  camp->add_option("--coexistence-radius", spec.coexistence_radius, "max-norm radius around u_C");
  camp->add_option("--convention", camp_conv, "birth_exact, unit_pair or total_rate");
  camp->add_option("--event-budget", spec.event_budget, "BD events per path");
  camp->add_option("--mc-draws", spec.mc_draws, "rho_M draws");
  camp->add_flag("--p-noise", spec.p_noise, "enable predator noise");
  camp->add_flag("--dry-run", spec.dry_run, "predictions only");
  camp->add_option("--out", spec.out_dir, "output directory");

  // coalescent
  auto* coal = app.add_subcommand("coalescent", "Kingman or large-V lineage partition draws");
  ModelFlags coal_m;
  coal_m.add(coal);
  int coal_n = 10;
  double coal_t = 1.0;
  long coal_draws = 1000;
  std::string coal_outcome, coal_out = default_out();
  coal->add_option("--n", coal_n, "sample size");
  coal->add_option("--t", coal_t, "Kingman duration (ignored with --outcome)");
  coal->add_option("--draws", coal_draws, "number of partitions");
  coal->add_option("--outcome", coal_outcome, "outcome label for the large-V predictor");
  coal->add_option("--out", coal_out, "output directory");

  // compare
  auto* cmp = app.add_subcommand("compare", "verdict for a campaign directory");
  std::string cmp_in = default_out();
  cmp->add_option("--in", cmp_in, "campaign directory");

  // figures-data
  auto* figs = app.add_subcommand("figures-data", "write the CSVs behind the figures");
  std::string figs_out = default_out() + "/figures";
  figs->add_option("--out", figs_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    unsigned long long seed = 1;
    if (ode->parsed()) {
      const ModelParams mp = ode_m.params(&seed);
      const double te = ode_tend > 0 ? ode_tend : 1.0 / (mp.epsilon * mp.epsilon);
      auto tr = integrate_ode(mp, initial_state(mp), te, ode_tol);
      auto det = detect_stages(tr, mp);
      ensure_dir(ode_out);
      write_trajectory_csv(ode_out + "/trajectory.csv", tr.times, tr.states);
      write_stage_times_csv(ode_out + "/stage_times.csv", det);
      std::cout << tr.size() << " steps, " << det.complete_cycles() << " complete cycles"
                << (det.ambiguous ? " (ambiguous crossings)" : "") << "\n";
    } else if (sde->parsed()) {
      const ModelParams mp = sde_m.params(&seed);
      Rng rng(seed, 0);
      SdeOptions o;
      o.dt = sde_dt;
      o.floor_cells = sde_floor;
      o.p_noise = sde_pnoise;
      o.record_stride = sde_stride;
      const double te = sde_tend > 0 ? sde_tend : 1.0 / (mp.epsilon * mp.epsilon);
      auto path = integrate_sde(mp, initial_state(mp), te, rng, o);
      ensure_dir(sde_out);
      write_trajectory_csv(sde_out + "/path.csv", path.times, path.states);
      const auto oc = classify_outcome(summarize(path), mp, te);
      std::cout << "outcome=" << to_string(oc.label) << " t=" << fmt(oc.t_resolved) << "\n";
    } else if (bd->parsed()) {
      const ModelParams mp = bd_m.params(&seed);
      Rng rng(seed, 0);
      BdOptions o;
      o.genealogy = bd_gen;
      o.record_dt = bd_rec;
      o.event_budget = bd_budget;
      const double te = bd_tend > 0 ? bd_tend : 1.0 / (mp.epsilon * mp.epsilon);
      auto path = simulate_bd(mp, initial_counts(mp), te, rng, o);
      ensure_dir(bd_out);
      {
        CsvWriter w(bd_out + "/path.csv", {"t", "N_v", "N_vstar", "N_p"});
        for (std::size_t i = 0; i < path.times.size(); ++i)
          w.row({fmt(path.times[i]), fmt(path.counts[i].v), fmt(path.counts[i].vstar), fmt(path.counts[i].p)});
        w.close();
      }
      if (bd_gen)
        for (auto [name, g] : {std::pair{"wild", &path.wild}, std::pair{"mutant", &path.mutant}}) {
          CsvWriter w(bd_out + "/genealogy_" + name + ".csv", {"child", "parent", "t"});
          for (std::size_t b = 0; b < (*g)->births.size(); ++b)
            w.row({fmt((long long)((*g)->founders + (long long)b)), fmt((long long)(*g)->births[b].parent),
                   fmt((*g)->births[b].t)});
          w.close();
        }
      const auto oc = classify_outcome(summarize(path), mp, te);
      std::cout << path.events << " events, outcome=" << to_string(oc.label)
                << (path.budget_exhausted ? " (event budget exhausted)" : "") << "\n";
    } else if (pred->parsed()) {
      const ModelParams mp = pred_m.params(&seed);
      MonteCarloOptions mc;
      mc.draws = pred_draws;
      mc.seed = seed;
      mc.workers = pred_workers;
      const auto probs = outcome_probs(mp, mc);
      print_prediction(mp, probs);
      if (!pred_out.empty()) {
        ensure_dir(pred_out);
        write_predictor_report(pred_out + "/predictor_report.csv", mp, probs);
      }
    } else if (camp->parsed()) {
      spec.mp = camp_m.params(&seed);
      spec.seed = seed;
      spec.fidelity = fidelity_from_string(camp_fid);
      spec.convention = rate_convention_from_string(camp_conv);
      auto s = run_campaign(spec);
      for (auto l : all_outcomes())
        std::cout << to_string(l) << " " << s.counts[l].count << "/" << s.counts[l].n << "\n";
      if (!s.prediction_note.empty()) std::cout << "no prediction: " << s.prediction_note << "\n";
      std::cout << "wrote " << spec.out_dir << "\n";
    } else if (coal->parsed()) {
      Rng rng(1, 0);
      ModelParams mp;
      bool t3 = !coal_outcome.empty();
      if (t3) {
        mp = coal_m.params(&seed);
        rng = Rng(seed, 0);
      }
      ensure_dir(coal_out);
      CsvWriter w(coal_out + "/partitions.csv", {"replicate", "case", "n", "n0", "blocks"});
      const std::string label = t3 ? coal_outcome : "kingman";
      const OutcomeLabel ol = t3 ? outcome_from_string(coal_outcome) : OutcomeLabel::Unresolved;
      for (long i = 0; i < coal_draws; ++i) {
        const LineagePartition p = t3 ? theorem3_predict(mp, ol, coal_n, rng) : kingman_sample(coal_n, coal_t, rng).partition;
        w.row({fmt((long long)i), label, fmt((long long)p.n), fmt((long long)p.n0()), p.blocks_string()});
      }
      w.close();
      std::cout << "wrote " << coal_out << "/partitions.csv\n";
    } else if (cmp->parsed()) {
      const auto rep = compare(read_summary(cmp_in));
      for (const auto& r : rep.rows)
        std::cout << r.quantity << " " << r.kind << "=" << fmt(r.value) << " " << (r.pass ? "ok" : "FAIL") << "\n";
      std::cout << (rep.pass ? "PASS" : "FAIL") << "\n";
      return rep.pass ? 0 : 2;
    } else if (figs->parsed()) {
      return write_figures_data(figs_out);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
