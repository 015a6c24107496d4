#pragma once

// Black-box genetic search over wrinkle genes: evaluate, keep elites,
// tournament-select, uniform crossover, Gaussian mutation with reflection,
// random immigrants, and partial restarts on stagnation. The evaluation
// budget (oracle queries per image) bounds the run.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "wrinkle/error.hpp"
#include "wrinkle/fitness.hpp"
#include "wrinkle/gene.hpp"
#include "wrinkle/image.hpp"
#include "wrinkle/oracle.hpp"
#include "wrinkle/parallel.hpp"
#include "wrinkle/perceptual.hpp"
#include "wrinkle/render.hpp"
#include "wrinkle/rng.hpp"

namespace wrinkle {

struct GAConfig {
  int population = 8;
  int budget = 350;
  int elite = 1;
  double mutation_rate = 0.2;
  int immigrants = 1;
  int stagnation = 5;
  int tournament = 3;
  std::uint64_t seed = 0;

  void validate() const {
    if (population < 2) throw UsageError("ga: population must be >= 2");
    if (elite < 1 || elite >= population)
      throw UsageError("ga: elite size must satisfy 1 <= E < N");
    if (immigrants < 0) throw UsageError("ga: immigrants must be >= 0");
    if (elite + immigrants > population)
      throw UsageError("ga: elite + immigrants must not exceed the population");
    if (budget < population) throw UsageError("ga: budget must be >= population");
    if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0))
      throw UsageError("ga: mutation rate must lie in [0, 1]");
    if (stagnation < 1) throw UsageError("ga: stagnation threshold must be >= 1");
    if (tournament < 1) throw UsageError("ga: tournament size must be >= 1");
  }

  /// Offspring produced by selection + crossover + mutation per generation.
  int offspring_count() const noexcept { return population - elite - immigrants; }

  bool operator==(const GAConfig&) const = default;
};

/// Everything that shapes one per-image attack.
struct AttackConfig {
  GAConfig ga;
  FitnessConfig fitness;
  PerceptualConfig perceptual;
  SearchBox box = SearchBox::defaults();
  ScaleMask mask;
  double eps_z = 1e-6;

  void validate() const {
    ga.validate();
    fitness.validate();
    perceptual.validate();
    box.validate();
    if (!(eps_z > 0)) throw UsageError("eps_z must be > 0");
    if (!mask.large && !mask.medium && !mask.small)
      throw UsageError("at least one wrinkle scale must be enabled");
  }
  bool operator==(const AttackConfig&) const = default;
};

struct EvaluatedCandidate {
  WrinkleGene gene;
  double fitness = 0.0;
  double s_ladv = 0.0;
  double s_perc = 0.0;
  bool success = false;
  std::size_t predicted = 0;
  double true_prob = 0.0;
  std::optional<Image> image;  // the rendered, 8-bit-quantized x'
};

/// Higher fitness first; equal fitness falls back to higher s_perc.
inline bool ranks_above(const EvaluatedCandidate& a, const EvaluatedCandidate& b) {
  if (a.fitness != b.fitness) return a.fitness > b.fitness;
  return a.s_perc > b.s_perc;
}

// ---------------------------------------------------------------------------
// Population operators

/// Uniform draw inside the box; integer coordinates uniform over their range.
inline WrinkleGene sample_gene(const SearchBox& box, const AttackConfig& cfg,
                               Xoshiro256& rng) {
  GeneVector x{};
  for (std::size_t k = 0; k < kGeneDims; ++k) {
    const Interval& iv = box.bounds[k];
    x[k] = iv.integer ? static_cast<double>(rng.uniform_int(
                            static_cast<std::int64_t>(iv.lo),
                            static_cast<std::int64_t>(iv.hi)))
                      : rng.uniform(iv.lo, iv.hi);
  }
  WrinkleGene g;
  assign_vector(g, x);
  g.seed = rng.next();
  g.mask = cfg.mask;
  g.appearance.eps_z = cfg.eps_z;
  return g;
}

/// N uniform genes with pairwise distinct center seeds.
inline std::vector<WrinkleGene> init_population(const AttackConfig& cfg,
                                                Xoshiro256& rng) {
  cfg.box.validate();
  std::vector<WrinkleGene> pop;
  std::unordered_set<std::uint64_t> seeds;
  pop.reserve(static_cast<std::size_t>(cfg.ga.population));
  while (pop.size() < static_cast<std::size_t>(cfg.ga.population)) {
    WrinkleGene g = sample_gene(cfg.box, cfg, rng);
    if (!seeds.insert(g.seed).second) continue;
    pop.push_back(g);
  }
  return pop;
}

/// Tournament selection with replacement. Ties on (fitness, s_perc) keep the
/// contestant drawn first, so fully tied populations are sampled uniformly.
inline std::vector<std::size_t> select(const std::vector<EvaluatedCandidate>& pop,
                                       std::size_t pool_size, int tournament,
                                       Xoshiro256& rng) {
  if (pop.empty()) throw InvariantError("select: empty population");
  const auto last = static_cast<std::int64_t>(pop.size()) - 1;
  std::vector<std::size_t> pool;
  pool.reserve(pool_size);
  for (std::size_t s = 0; s < pool_size; ++s) {
    auto best = static_cast<std::size_t>(rng.uniform_int(0, last));
    for (int t = 1; t < tournament; ++t) {
      const auto c = static_cast<std::size_t>(rng.uniform_int(0, last));
      if (ranks_above(pop[c], pop[best])) best = c;
    }
    pool.push_back(best);
  }
  return pool;
}

/// Child seed for a gene that inherited `own` and crossed with `other`.
/// Equal parent seeds pass through unchanged.
inline std::uint64_t mix_seeds(std::uint64_t own, std::uint64_t other) noexcept {
  if (own == other) return own;
  return mix64(own ^ rotl64(other, 29));
}

/// Uniform crossover on sequential pairs (0,1), (2,3), ...; each pair yields
/// two complementary children. An odd tail pairs with the first parent and
/// yields one child. Output size equals input size.
inline std::vector<WrinkleGene> crossover(const std::vector<WrinkleGene>& parents,
                                          Xoshiro256& rng) {
  const std::size_t n = parents.size();
  if (n < 2) return parents;
  std::vector<WrinkleGene> children;
  children.reserve(n);
  for (std::size_t i = 0; i < n; i += 2) {
    const WrinkleGene& a = parents[i];
    const WrinkleGene& b = parents[(i + 1) % n];
    const GeneVector xa = to_vector(a);
    const GeneVector xb = to_vector(b);
    GeneVector c1{}, c2{};
    for (std::size_t k = 0; k < kGeneDims; ++k) {
      const bool from_a = rng.bernoulli(0.5);
      c1[k] = from_a ? xa[k] : xb[k];
      c2[k] = from_a ? xb[k] : xa[k];
    }
    const bool seed_from_a = rng.bernoulli(0.5);
    WrinkleGene g1 = a;
    assign_vector(g1, c1);
    g1.seed = seed_from_a ? mix_seeds(a.seed, b.seed) : mix_seeds(b.seed, a.seed);
    children.push_back(g1);
    if (children.size() == n) break;
    WrinkleGene g2 = b;
    assign_vector(g2, c2);
    g2.seed = seed_from_a ? mix_seeds(b.seed, a.seed) : mix_seeds(a.seed, b.seed);
    children.push_back(g2);
  }
  return children;
}

/// Folds x back into [lo, hi] by repeated mirror reflection at the bounds.
inline double reflect_into(double x, double lo, double hi) noexcept {
  const double w = hi - lo;
  if (w <= 0) return lo;
  const double period = 2 * w;
  double t = std::fmod(x - lo, period);
  if (t < 0) t += period;
  const double r = t <= w ? lo + t : hi - (t - w);
  return std::clamp(r, lo, hi);
}

/// Per coordinate with probability p_m: continuous values get N(0, (w/10)^2)
/// noise then reflect into the box; integers are redrawn uniformly. The
/// center seed is redrawn with probability p_m.
inline void mutate(std::vector<WrinkleGene>& genes, double p_m,
                   const SearchBox& box, Xoshiro256& rng) {
  for (WrinkleGene& g : genes) {
    GeneVector x = to_vector(g);
    for (std::size_t k = 0; k < kGeneDims; ++k) {
      if (!rng.bernoulli(p_m)) continue;
      const Interval& iv = box.bounds[k];
      if (iv.integer)
        x[k] = static_cast<double>(rng.uniform_int(static_cast<std::int64_t>(iv.lo),
                                                   static_cast<std::int64_t>(iv.hi)));
      else
        x[k] = reflect_into(x[k] + 0.1 * iv.width() * rng.normal(), iv.lo, iv.hi);
    }
    assign_vector(g, x);
    if (rng.bernoulli(p_m)) g.seed = rng.next();
  }
}

// ---------------------------------------------------------------------------
// Evaluation

/// Renders, quantizes to 8 bits, and scores one gene with a query that has
/// already been reserved on `ledger`.
inline EvaluatedCandidate score_gene(const WrinkleGene& gene, const Image& x,
                                     std::size_t label, const Oracle& oracle,
                                     QueryLedger& ledger, const AttackConfig& cfg,
                                     const PerceptualMetric* metric) {
  EvaluatedCandidate c;
  c.gene = gene;
  Image rendered = quantize(render_perturbation(x, gene));
  const ProbVector probs = ledger.predict_reserved(oracle, rendered);
  c.success = success_indicator(probs, label);
  c.predicted = probs.argmax();
  c.true_prob = probs.values[label];
  c.s_ladv = normalize_adv(adversarial_score(probs, label, cfg.fitness), cfg.fitness);
  c.s_perc = perceptual_similarity(x, rendered, cfg.perceptual, metric);
  c.fitness = hierarchical_fitness(c.s_ladv, c.s_perc, c.success, cfg.fitness);
  c.image = std::move(rendered);
  return c;
}

/// Scores the population in order, one query per gene. When fewer queries
/// remain than genes, only the leading genes are scored (partial result).
inline std::vector<EvaluatedCandidate> evaluate(
    const std::vector<WrinkleGene>& pop, const Image& x, std::size_t label,
    const Oracle& oracle, QueryLedger& ledger, const AttackConfig& cfg,
    const PerceptualMetric* metric = nullptr, int workers = 1) {
  const std::int64_t granted = ledger.acquire(static_cast<std::int64_t>(pop.size()));
  if (granted == 0 && !pop.empty())
    throw BudgetExhausted("evaluate: query budget exhausted");
  std::vector<EvaluatedCandidate> out(static_cast<std::size_t>(granted));
  parallel_for(out.size(), workers, [&](std::size_t i) {
    out[i] = score_gene(pop[i], x, label, oracle, ledger, cfg, metric);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Full attack

struct AttackOutcome {
  bool success = false;
  bool aborted = false;
  std::string error;
  std::int64_t queries = 0;
  int generations = 0;
  int restarts = 0;
  std::optional<EvaluatedCandidate> best;  // keeps its rendered image
  std::vector<double> trace;               // best-ever fitness per generation
};

/// Runs the genetic search on one image until the query budget is spent.
/// The GA's random stream is xoshiro256** (cfg.ga.seed, stream 0x6A); its
/// consumption does not depend on the budget, so a larger budget always
/// explores a superset of the candidates of a smaller one.
inline AttackOutcome run_attack(const Image& x, std::size_t label, const Oracle& oracle,
                                const AttackConfig& cfg,
                                const PerceptualMetric* metric = nullptr,
                                int workers = 1) {
  cfg.validate();
  require_valid(x, "run_attack");
  if (auto k = oracle.num_classes(); k && label >= *k)
    throw UsageError("label index outside the oracle's class range");

  AttackOutcome result;
  QueryLedger ledger(cfg.ga.budget);
  Xoshiro256 rng(cfg.ga.seed, 0x6A);
  std::vector<WrinkleGene> pop = init_population(cfg, rng);
  double best_fitness = -std::numeric_limits<double>::infinity();
  int stale = 0;

  try {
    while (ledger.remaining() > 0) {
      std::vector<EvaluatedCandidate> scored =
          evaluate(pop, x, label, oracle, ledger, cfg, metric, workers);
      ++result.generations;
      for (const auto& c : scored)
        if (!result.best || c.fitness > result.best->fitness) result.best = c;
      result.trace.push_back(result.best->fitness);
      if (scored.size() < pop.size() || ledger.remaining() == 0) break;

      if (result.best->fitness > best_fitness + 1e-9) {
        stale = 0;
      } else {
        ++stale;
      }
      best_fitness = std::max(best_fitness, result.best->fitness);

      std::vector<std::size_t> order(scored.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return ranks_above(scored[a], scored[b]);
      });

      std::vector<WrinkleGene> next;
      next.reserve(pop.size());
      for (int e = 0; e < cfg.ga.elite; ++e) next.push_back(scored[order[e]].gene);

      const auto pool_size = static_cast<std::size_t>(cfg.ga.offspring_count());
      std::vector<WrinkleGene> parents;
      for (std::size_t idx : select(scored, pool_size, cfg.ga.tournament, rng))
        parents.push_back(scored[idx].gene);
      std::vector<WrinkleGene> offspring = crossover(parents, rng);
      mutate(offspring, cfg.ga.mutation_rate, cfg.box, rng);
      next.insert(next.end(), offspring.begin(), offspring.end());
      for (int r = 0; r < cfg.ga.immigrants; ++r)
        next.push_back(sample_gene(cfg.box, cfg, rng));

      if (stale >= cfg.ga.stagnation) {
        for (std::size_t i = static_cast<std::size_t>(cfg.ga.elite); i < next.size(); ++i)
          next[i] = sample_gene(cfg.box, cfg, rng);
        stale = 0;
        ++result.restarts;
      }
      pop = std::move(next);
    }
  } catch (const OracleError& e) {
    result.aborted = true;
    result.error = e.what();
  }

  result.queries = ledger.used();
  result.success = result.best && result.best->success;
  return result;
}

/// Unoptimized baseline: a single uniform gene per image, one query.
inline AttackOutcome run_random_baseline(const Image& x, std::size_t label,
                                         const Oracle& oracle, const AttackConfig& cfg,
                                         const PerceptualMetric* metric = nullptr) {
  cfg.validate();
  require_valid(x, "run_random_baseline");
  AttackOutcome result;
  QueryLedger ledger(1);
  Xoshiro256 rng(cfg.ga.seed, 0x6A);
  const WrinkleGene gene = sample_gene(cfg.box, cfg, rng);
  try {
    auto scored = evaluate({gene}, x, label, oracle, ledger, cfg, metric, 1);
    result.best = std::move(scored.front());
    result.trace.push_back(result.best->fitness);
    result.generations = 1;
  } catch (const OracleError& e) {
    result.aborted = true;
    result.error = e.what();
  }
  result.queries = ledger.used();
  result.success = result.best && result.best->success;
  return result;
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const GAConfig& c) {
  j = nlohmann::json{{"population", c.population}, {"budget", c.budget},
                     {"elite", c.elite},           {"mutation_rate", c.mutation_rate},
                     {"immigrants", c.immigrants}, {"stagnation", c.stagnation},
                     {"tournament", c.tournament}, {"seed", c.seed}};
}
inline void from_json(const nlohmann::json& j, GAConfig& c) {
  const GAConfig d;
  c.population = j.value("population", d.population);
  c.budget = j.value("budget", d.budget);
  c.elite = j.value("elite", d.elite);
  c.mutation_rate = j.value("mutation_rate", d.mutation_rate);
  c.immigrants = j.value("immigrants", d.immigrants);
  c.stagnation = j.value("stagnation", d.stagnation);
  c.tournament = j.value("tournament", d.tournament);
  c.seed = j.value("seed", d.seed);
}

inline void to_json(nlohmann::json& j, const AttackConfig& c) {
  j = nlohmann::json{{"ga", c.ga},
                     {"fitness", c.fitness},
                     {"perceptual", c.perceptual},
                     {"search_box", c.box},
                     {"components", mask_name(c.mask)},
                     {"eps_z", c.eps_z}};
}
inline void from_json(const nlohmann::json& j, AttackConfig& c) {
  c = AttackConfig{};
  if (j.contains("ga")) c.ga = j.at("ga").get<GAConfig>();
  if (j.contains("fitness")) c.fitness = j.at("fitness").get<FitnessConfig>();
  if (j.contains("perceptual")) c.perceptual = j.at("perceptual").get<PerceptualConfig>();
  if (j.contains("search_box")) c.box = j.at("search_box").get<SearchBox>();
  if (j.contains("components")) c.mask = parse_mask(j.at("components").get<std::string>());
  c.eps_z = j.value("eps_z", c.eps_z);
}

}  // namespace wrinkle
