#include "escape/coalescent.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

namespace escape {

std::string LineagePartition::blocks_string() const {
  std::vector<int> b = blocks;
  std::sort(b.rbegin(), b.rend());
  std::string s;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(b[i]);
  }
  return s;
}

std::string LineagePartition::signature() const { return std::to_string(n0()) + "|" + blocks_string(); }

namespace {

LineagePartition from_members(int n, const std::vector<int>& member) {
  std::map<int, int> size;
  for (int m : member) ++size[m];
  LineagePartition p;
  p.n = n;
  for (auto& [_, s] : size) p.blocks.push_back(s);
  std::sort(p.blocks.rbegin(), p.blocks.rend());
  return p;
}

}  // namespace

KingmanResult kingman_sample(int n, double t, Rng& rng) {
  if (n < 1) throw std::invalid_argument("kingman_sample: n must be >= 1");
  if (!(t >= 0)) throw std::invalid_argument("kingman_sample: t must be >= 0");
  KingmanResult r;
  r.duration = t;
  // blocks[b] lists the samples in block b
  std::vector<std::vector<int>> blocks(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) blocks[std::size_t(i)] = {i};
  double elapsed = 0;
  bool first = true;
  while (blocks.size() > 1) {
    const double k = double(blocks.size());
    elapsed += -std::log(rng.uniform_pos()) / (k * (k - 1) / 2);
    if (elapsed > t) break;
    const auto m = blocks.size();
    auto i = std::size_t(rng.uniform() * double(m));
    auto j = std::size_t(rng.uniform() * double(m - 1));
    if (j >= i) ++j;
    if (i > j) std::swap(i, j);
    if (first) {
      r.first_a = blocks[i].front();
      r.first_b = blocks[j].front();
      if (r.first_a > r.first_b) std::swap(r.first_a, r.first_b);
      first = false;
    }
    blocks[i].insert(blocks[i].end(), blocks[j].begin(), blocks[j].end());
    blocks.erase(blocks.begin() + std::ptrdiff_t(j));
  }
  r.member.assign(std::size_t(n), 0);
  for (std::size_t b = 0; b < blocks.size(); ++b)
    for (int s : blocks[b]) r.member[std::size_t(s)] = int(b);
  r.partition = from_members(n, r.member);
  return r;
}

const char* to_string(Which w) { return w == Which::Wild ? "wild" : "mutant"; }

const char* to_string(RateConvention c) {
  switch (c) {
    case RateConvention::BirthExact: return "birth_exact";
    case RateConvention::UnitPair: return "unit_pair";
    case RateConvention::TotalRate: return "total_rate";
  }
  return "?";
}

RateConvention rate_convention_from_string(const std::string& s) {
  for (auto c : {RateConvention::BirthExact, RateConvention::UnitPair, RateConvention::TotalRate})
    if (s == to_string(c)) return c;
  throw std::invalid_argument("unknown rate convention: " + s);
}

double pair_rate(const ModelParams& mp, Which which, RateConvention c) {
  switch (c) {
    case RateConvention::BirthExact: return which == Which::Wild ? mp.k + 1 : mp.kstar + mp.f;
    case RateConvention::UnitPair: return 1.0;
    case RateConvention::TotalRate: return 2.0;
  }
  return 1.0;
}

double lineage_clock(const SdePath& path, const ModelParams& mp, Which which) {
  const bool wild = which == Which::Wild;
  if (wild ? path.absorbed_v.has_value() : path.absorbed_vstar.has_value())
    throw std::domain_error(std::string("track_lineages: ") + to_string(which) + " type absorbed on the path");
  auto x = [&](const SystemState& s) { return wild ? s.v : s.vstar; };
  double tau = 0;
  for (std::size_t i = 0; i < path.states.size(); ++i) {
    if (x(path.states[i]) * mp.V < 0.5)
      throw std::runtime_error("track_lineages: tracked density below half a cell at t=" +
                               std::to_string(path.times[i]));
    if (i) tau += 0.5 * (path.times[i] - path.times[i - 1]) *
                  (1 / (mp.V * x(path.states[i - 1])) + 1 / (mp.V * x(path.states[i])));
  }
  return tau;
}

double lineage_clock(const BdPath& path, Which which) {
  const bool wild = which == Which::Wild;
  if (wild ? path.absorbed_v.has_value() : path.absorbed_vstar.has_value())
    throw std::domain_error(std::string("track_lineages: ") + to_string(which) + " type absorbed on the path");
  return wild ? path.inv_n_v.back() : path.inv_n_vstar.back();
}

LineagePartition track_lineages(const SdePath& path, const ModelParams& mp, int n, Which which, Rng& rng,
                                RateConvention conv) {
  const double tau = lineage_clock(path, mp, which);
  return kingman_sample(n, pair_rate(mp, which, conv) * tau, rng).partition;
}

LineagePartition track_lineages(const BdPath& path, const ModelParams& mp, int n, Which which, Rng& rng,
                                RateConvention conv) {
  const double tau = lineage_clock(path, which);  // already in units of 1/N = 1/(V x)
  return kingman_sample(n, pair_rate(mp, which, conv) * tau, rng).partition;
}

LineagePartition bd_genealogy(const BdPath& path, int n, Which which, Rng& rng) {
  const auto& og = which == Which::Wild ? path.wild : path.mutant;
  if (!og) throw std::invalid_argument("bd_genealogy: path has no genealogy log");
  const Genealogy& g = *og;
  if (n < 1 || std::size_t(n) > g.alive.size())
    throw std::invalid_argument("bd_genealogy: n must lie in [1, number alive at the end]");
  std::vector<std::int32_t> founder(std::size_t(g.founders) + g.births.size());
  for (long long i = 0; i < g.founders; ++i) founder[std::size_t(i)] = std::int32_t(i);
  for (std::size_t b = 0; b < g.births.size(); ++b)
    founder[std::size_t(g.founders) + b] = founder[std::size_t(g.births[b].parent)];
  // partial Fisher-Yates over the survivors
  std::vector<std::int32_t> pool = g.alive;
  std::vector<int> member;
  member.reserve(std::size_t(n));
  for (int i = 0; i < n; ++i) {
    const auto j = std::size_t(i) + std::size_t(rng.uniform() * double(pool.size() - std::size_t(i)));
    std::swap(pool[std::size_t(i)], pool[j]);
    member.push_back(founder[std::size_t(pool[std::size_t(i)])]);
  }
  return from_members(n, member);
}

GeneticCase genetic_case(OutcomeLabel l) {
  switch (l) {
    case OutcomeLabel::FailedMutant: return GeneticCase::Failed;
    case OutcomeLabel::WildLost: return GeneticCase::WildLost;
    case OutcomeLabel::Coexistence: return GeneticCase::Coexistence;
    case OutcomeLabel::MutantLostAfterRise:
    case OutcomeLabel::Unresolved: return GeneticCase::MutantLost;
  }
  return GeneticCase::MutantLost;
}

LineagePartition theorem3_predict(const ModelParams& mp, OutcomeLabel outcome, int n, Rng& rng, int steps) {
  if (n < 1) throw std::invalid_argument("theorem3_predict: n must be >= 1");
  const GeneticCase gc = genetic_case(outcome);
  LineagePartition p;
  p.n = n;
  if (gc == GeneticCase::Failed) {
    p.blocks.assign(std::size_t(n), 1);
    return p;
  }
  if (gc == GeneticCase::WildLost) {
    p.blocks = {n};
    return p;
  }
  const GeneticTimes gt = t_genetic(mp, gc, rng, steps);
  int n_wild = n;
  if (gc == GeneticCase::Coexistence) {
    std::binomial_distribution<int> bin(n, mp.alpha * (1 - mp.f) / mp.f);
    n_wild = bin(rng);
  }
  if (n_wild > 0) p.blocks = kingman_sample(n_wild, gt.t1, rng).partition.blocks;
  if (n - n_wild > 0) p.blocks.push_back(n - n_wild);  // mutant sub-sample, Kingman run forever
  // wild blocks first; the order carries no meaning
  return p;
}

}  // namespace escape
