#pragma once

/// @file strategies.hpp
/// @brief Budgeted tuning strategies over a replayed coverage matrix:
/// Default, Global Meta-GA, and {random, prioritized, all} subsets crossed
/// with {Random Search, Meta-GA, Differential Evolution}.
///
/// One fitness evaluation stands for one test-generation run and costs
/// 120 seconds of budget. Searches rank candidates by single sampled runs;
/// the adopted configuration is scored against per-pair medians and falls
/// back to the default when it does not beat it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tunegain/coverage_matrix.hpp"
#include "tunegain/error.hpp"
#include "tunegain/parallel.hpp"
#include "tunegain/random.hpp"
#include "tunegain/search_space.hpp"
#include "tunegain/text.hpp"
#include "tunegain/tuning_gain.hpp"

namespace tunegain {

inline constexpr double kSecondsPerEvaluation = 120.0;
inline constexpr std::size_t kPopulationSize = 6;
inline constexpr double kGaCrossoverRate = 0.5;
inline constexpr double kGaMutationRate = 0.1;
inline constexpr double kDeCrossoverRate = 0.8;
inline constexpr double kDeWeight = 0.9;

class BudgetLedger {
 public:
  explicit BudgetLedger(double total_seconds, double cost_per_eval_seconds = kSecondsPerEvaluation)
      : total_seconds_(total_seconds), cost_(cost_per_eval_seconds) {
    if (!(total_seconds >= 0.0)) throw Error("budget must be non-negative");
    if (!(cost_per_eval_seconds > 0.0)) throw Error("evaluation cost must be positive");
    // Tolerate representation error in products like 0.1 h * 3600.
    capacity_ = static_cast<std::size_t>(std::floor(total_seconds / cost_ + 1e-9));
  }

  static BudgetLedger from_evals(std::size_t evals) {
    return BudgetLedger(static_cast<double>(evals) * kSecondsPerEvaluation);
  }
  static BudgetLedger from_hours(double hours) { return BudgetLedger(hours * 3600.0); }

  double total_seconds() const noexcept { return total_seconds_; }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t spent() const noexcept { return spent_; }
  std::size_t remaining() const noexcept { return capacity_ - spent_; }

  bool try_spend(std::size_t evals = 1) noexcept {
    if (evals > remaining()) return false;
    spent_ += evals;
    return true;
  }

  void spend(std::size_t evals) {
    if (!try_spend(evals))
      throw Error("budget overrun: spending " + std::to_string(evals) + " with " + std::to_string(remaining()) +
                  " evaluations left");
  }

 private:
  double total_seconds_;
  double cost_;
  std::size_t capacity_ = 0;
  std::size_t spent_ = 0;
};

/// Equal split of the remaining evaluations; the remainder stays unspent.
inline std::size_t per_class_budget(const BudgetLedger& ledger, std::size_t n_classes) {
  if (n_classes < 1) throw Error("per_class_budget: no classes");
  return ledger.remaining() / n_classes;
}

/// Replays runs from a matrix over a search space whose full space is the
/// matrix's space (a reduced space pins dropped parameters at defaults).
class Evaluator {
 public:
  explicit Evaluator(const CoverageMatrix& matrix) : matrix_(&matrix), space_(matrix.space()) {}
  Evaluator(const CoverageMatrix& matrix, HyperParameterSpace search_space)
      : matrix_(&matrix), space_(std::move(search_space)) {
    if (!(space_.full_space() == matrix.space())) throw Error("search space does not derive from the matrix space");
  }

  const CoverageMatrix& matrix() const noexcept { return *matrix_; }
  const HyperParameterSpace& space() const noexcept { return space_; }
  ConfigId matrix_id(const Configuration& c) const { return space_.full_id(c); }

  long long sample(std::size_t cls, const Configuration& c, Rng& rng) const {
    return matrix_->sample(cls, matrix_id(c), rng);
  }
  double ground_truth(std::size_t cls, const Configuration& c) const {
    return matrix_->ground_truth(cls, matrix_id(c));
  }

 private:
  const CoverageMatrix* matrix_;
  HyperParameterSpace space_;
};

struct ClassTuning {
  Configuration chosen;
  std::size_t evals_used = 0;
  double extra = 0.0;
};

using Fitness = std::function<double(const Configuration&)>;

namespace detail {

struct Scored {
  Configuration config;
  double fitness;
};

/// Tracks the best evaluated configuration (first found wins ties).
struct Archive {
  std::optional<Scored> best;
  void offer(const Configuration& c, double f) {
    if (!best || f > best->fitness) best = Scored{c, f};
  }
};

inline Configuration random_config(const HyperParameterSpace& space, Rng& rng) {
  Configuration c;
  c.genes.reserve(space.dimension());
  for (const auto& p : space.params()) c.genes.push_back(uniform_index(rng, p.values.size()));
  return c;
}

/// Evaluates n distinct configurations drawn uniformly without replacement.
inline std::optional<Scored> random_search(const HyperParameterSpace& space, std::size_t n, const Fitness& fitness,
                                           Rng& rng) {
  Archive archive;
  auto n_draw = static_cast<std::size_t>(std::min<std::uint64_t>(n, space.size()));
  for (std::size_t id : sample_without_replacement(rng, static_cast<std::size_t>(space.size()), n_draw)) {
    Configuration c = space.decode(id);
    archive.offer(c, fitness(c));
  }
  return archive.best;
}

/// Evaluates every grid point once, in id order.
inline std::optional<Scored> exhaustive_search(const HyperParameterSpace& space, const Fitness& fitness) {
  Archive archive;
  for (ConfigId id = 0; id < space.size(); ++id) {
    Configuration c = space.decode(id);
    archive.offer(c, fitness(c));
  }
  return archive.best;
}

inline std::size_t binary_tournament(const std::vector<Scored>& pop, Rng& rng) {
  std::size_t a = uniform_index(rng, pop.size());
  std::size_t b = uniform_index(rng, pop.size());
  return pop[b].fitness > pop[a].fitness ? b : a;
}

/// Generational GA over grid genes: population 6, elitism 1, binary
/// tournament, uniform crossover, uniform-reset mutation. Stops when the
/// next individual cannot be evaluated.
inline std::optional<Scored> meta_ga(const HyperParameterSpace& space, std::size_t n_evals, const Fitness& fitness,
                                     Rng& rng) {
  if (n_evals >= space.size()) return exhaustive_search(space, fitness);
  if (n_evals < kPopulationSize) return random_search(space, n_evals, fitness, rng);
  Archive archive;
  std::size_t used = 0;
  std::vector<Scored> pop;
  for (std::size_t i = 0; i < kPopulationSize; ++i) {
    Configuration c = random_config(space, rng);
    double f = fitness(c);
    ++used;
    archive.offer(c, f);
    pop.push_back({std::move(c), f});
  }
  while (used < n_evals) {
    std::vector<Scored> next;
    next.push_back(*std::max_element(pop.begin(), pop.end(),
                                     [](const Scored& a, const Scored& b) { return a.fitness < b.fitness; }));
    while (next.size() < kPopulationSize && used < n_evals) {
      const auto& p1 = pop[binary_tournament(pop, rng)].config;
      const auto& p2 = pop[binary_tournament(pop, rng)].config;
      Configuration child = p1;
      for (std::size_t g = 0; g < child.genes.size(); ++g) {
        if (bernoulli(rng, kGaCrossoverRate)) child.genes[g] = p2.genes[g];
        if (bernoulli(rng, kGaMutationRate)) child.genes[g] = uniform_index(rng, space.params()[g].values.size());
      }
      double f = fitness(child);
      ++used;
      archive.offer(child, f);
      next.push_back({std::move(child), f});
    }
    pop = std::move(next);
  }
  return archive.best;
}

}  // namespace detail

/// Mutant gene of DE/rand/1 on an integer domain: round(a + F (b - c)),
/// clamped to [0, domain - 1].
inline std::size_t de_mutant_gene(std::size_t a, std::size_t b, std::size_t c, double weight, std::size_t domain) {
  double v = static_cast<double>(a) + weight * (static_cast<double>(b) - static_cast<double>(c));
  long r = std::lround(v);
  return static_cast<std::size_t>(std::clamp<long>(r, 0, static_cast<long>(domain) - 1));
}

namespace detail {

/// DE/rand/1/bin over grid genes with population 6.
inline std::optional<Scored> differential_evolution(const HyperParameterSpace& space, std::size_t n_evals,
                                                    const Fitness& fitness, Rng& rng) {
  if (n_evals >= space.size()) return exhaustive_search(space, fitness);
  if (n_evals < kPopulationSize) return random_search(space, n_evals, fitness, rng);
  Archive archive;
  std::size_t used = 0;
  std::vector<Scored> pop;
  for (std::size_t i = 0; i < kPopulationSize; ++i) {
    Configuration c = random_config(space, rng);
    double f = fitness(c);
    ++used;
    archive.offer(c, f);
    pop.push_back({std::move(c), f});
  }
  const std::size_t dim = space.dimension();
  while (used < n_evals) {
    for (std::size_t i = 0; i < pop.size() && used < n_evals; ++i) {
      // Three distinct members other than the target.
      std::vector<std::size_t> others;
      for (std::size_t k = 0; k < pop.size(); ++k)
        if (k != i) others.push_back(k);
      auto pick = sample_without_replacement(rng, others.size(), 3);
      const auto& a = pop[others[pick[0]]].config;
      const auto& b = pop[others[pick[1]]].config;
      const auto& c = pop[others[pick[2]]].config;
      std::size_t forced = uniform_index(rng, dim);
      Configuration trial = pop[i].config;
      for (std::size_t g = 0; g < dim; ++g) {
        if (bernoulli(rng, kDeCrossoverRate) || g == forced)
          trial.genes[g] = de_mutant_gene(a.genes[g], b.genes[g], c.genes[g], kDeWeight, space.params()[g].values.size());
      }
      double f = fitness(trial);
      ++used;
      archive.offer(trial, f);
      if (f >= pop[i].fitness) pop[i] = {std::move(trial), f};
    }
  }
  return archive.best;
}

using SearchRoutine = std::optional<Scored> (*)(const HyperParameterSpace&, std::size_t, const Fitness&, Rng&);

inline ClassTuning tune_class(const Evaluator& ev, std::size_t cls, std::size_t budget_evals, Rng& rng,
                              SearchRoutine search) {
  BudgetLedger ledger = BudgetLedger::from_evals(budget_evals);
  const Configuration def = ev.space().default_config();
  ClassTuning out{def, 0, 0.0};
  Fitness fitness = [&](const Configuration& c) {
    ledger.spend(1);
    return static_cast<double>(ev.sample(cls, c, rng));
  };
  auto best = search(ev.space(), budget_evals, fitness, rng);
  out.evals_used = ledger.spent();
  if (!best) return out;
  double extra = ev.ground_truth(cls, best->config) - ev.ground_truth(cls, def);
  if (extra > 0.0) {
    out.chosen = best->config;
    out.extra = extra;
  }
  return out;
}

inline std::optional<Scored> random_search_routine(const HyperParameterSpace& s, std::size_t n, const Fitness& f, Rng& r) {
  return random_search(s, n, f, r);
}

}  // namespace detail

/// Evaluates up to n_evals distinct random configurations once each.
inline ClassTuning random_search_class(const Evaluator& ev, std::size_t cls, std::size_t n_evals, Rng& rng) {
  return detail::tune_class(ev, cls, n_evals, rng, &detail::random_search_routine);
}

/// Meta-GA on one class. Budgets below one population degrade to random
/// search; budgets covering the whole grid evaluate it exhaustively.
inline ClassTuning meta_ga_class(const Evaluator& ev, std::size_t cls, std::size_t budget_evals, Rng& rng) {
  return detail::tune_class(ev, cls, budget_evals, rng, &detail::meta_ga);
}

/// Differential evolution on one class, with the same degradation rules as meta_ga_class.
inline ClassTuning de_class(const Evaluator& ev, std::size_t cls, std::size_t budget_evals, Rng& rng) {
  return detail::tune_class(ev, cls, budget_evals, rng, &detail::differential_evolution);
}

enum class StrategyKind { default_config, global_meta_ga, random_search, meta_ga, differential_evolution };
enum class SubsetMode { prioritized, random, all };

struct StrategySpec {
  StrategyKind kind = StrategyKind::default_config;
  SubsetMode subset = SubsetMode::all;
  double cutoff = 1.0;

  /// Short name: default, glob_mg, or {pri,rnd,all}_{rs,mg,de}.
  std::string name() const {
    switch (kind) {
      case StrategyKind::default_config: return "default";
      case StrategyKind::global_meta_ga: return "glob_mg";
      default: break;
    }
    std::string prefix = subset == SubsetMode::prioritized ? "pri_" : subset == SubsetMode::random ? "rnd_" : "all_";
    std::string suffix = kind == StrategyKind::random_search ? "rs" : kind == StrategyKind::meta_ga ? "mg" : "de";
    return prefix + suffix;
  }

  bool needs_ranking() const {
    return subset == SubsetMode::prioritized && kind != StrategyKind::default_config &&
           kind != StrategyKind::global_meta_ga;
  }

  static StrategySpec parse(const std::string& name, double cutoff = 0.2) {
    StrategySpec s;
    s.cutoff = cutoff;
    if (name == "default") return s;
    if (name == "glob_mg") {
      s.kind = StrategyKind::global_meta_ga;
      return s;
    }
    auto us = name.find('_');
    if (us == std::string::npos) throw Error("unknown strategy '" + name + "'");
    std::string pre = name.substr(0, us), suf = name.substr(us + 1);
    if (pre == "pri") s.subset = SubsetMode::prioritized;
    else if (pre == "rnd") s.subset = SubsetMode::random;
    else if (pre == "all") s.subset = SubsetMode::all;
    else throw Error("unknown strategy '" + name + "'");
    if (suf == "rs") s.kind = StrategyKind::random_search;
    else if (suf == "mg") s.kind = StrategyKind::meta_ga;
    else if (suf == "de") s.kind = StrategyKind::differential_evolution;
    else throw Error("unknown strategy '" + name + "'");
    if (s.subset == SubsetMode::all) s.cutoff = 1.0;
    return s;
  }
};

inline const std::vector<std::string>& all_strategy_names() {
  static const std::vector<std::string> names = {"default", "glob_mg", "rnd_rs", "rnd_mg",
                                                 "rnd_de",  "pri_rs",  "pri_mg", "pri_de"};
  return names;
}

/// Picks the classes that receive tuning budget.
inline std::vector<std::string> select_subset(const std::vector<std::string>& classes, const Ranking* ranking,
                                              SubsetMode mode, double cutoff, Rng& rng) {
  if (!(cutoff > 0.0 && cutoff <= 1.0)) throw Error("cutoff must be in (0, 1]");
  if (mode == SubsetMode::all) return classes;
  const std::size_t n = classes.size();
  auto k = static_cast<std::size_t>(std::ceil(cutoff * static_cast<double>(n) - 1e-9));
  k = std::min(k, n);
  if (mode == SubsetMode::prioritized) {
    if (!ranking) throw Error("prioritized selection requires a ranking");
    std::vector<std::string> sorted_classes(classes), sorted_rank(ranking->order);
    std::sort(sorted_classes.begin(), sorted_classes.end());
    std::sort(sorted_rank.begin(), sorted_rank.end());
    if (sorted_classes != sorted_rank) throw Error("ranking does not cover exactly the tuned classes");
    return {ranking->order.begin(), ranking->order.begin() + static_cast<long>(k)};
  }
  std::vector<std::string> out;
  for (std::size_t i : sample_without_replacement(rng, n, k)) out.push_back(classes[i]);
  return out;
}

struct ClassOutcome {
  std::string class_id;
  ConfigId chosen_config = 0;  // id in the matrix (full) space
  std::size_t evals_used = 0;
  double extra = 0.0;
  bool tuned = false;
};

struct TuningResult {
  std::string strategy;
  std::uint64_t seed = 0;
  double budget_hours = 0.0;
  std::vector<ClassOutcome> classes;  // matrix class order
  double extra_sum = 0.0;
  std::size_t evals_used = 0;
  std::size_t capacity = 0;
  std::size_t unspent() const noexcept { return capacity - evals_used; }
};

/// One Meta-GA whose fitness is summed coverage over an evaluation class
/// set; the winning configuration is applied to every class.
inline TuningResult global_meta_ga(const Evaluator& ev, const std::vector<std::size_t>& classes,
                                   std::size_t budget_evals, Rng& rng) {
  if (classes.empty()) throw Error("global_meta_ga: no classes");
  if (budget_evals < kPopulationSize) throw Error("global_meta_ga: budget below one population (6 evaluations)");
  std::vector<std::size_t> eval_set = classes;
  if (budget_evals < kPopulationSize * classes.size()) {
    std::size_t k = budget_evals / kPopulationSize;
    eval_set.clear();
    for (std::size_t i : sample_without_replacement(rng, classes.size(), k)) eval_set.push_back(classes[i]);
  }
  BudgetLedger ledger = BudgetLedger::from_evals(budget_evals);
  Fitness fitness = [&](const Configuration& c) {
    ledger.spend(eval_set.size());
    double s = 0.0;
    for (std::size_t cls : eval_set) s += static_cast<double>(ev.sample(cls, c, rng));
    return s;
  };
  auto best = detail::meta_ga(ev.space(), budget_evals / eval_set.size(), fitness, rng);

  TuningResult r;
  r.evals_used = ledger.spent();
  r.capacity = budget_evals;
  const Configuration def = ev.space().default_config();
  for (std::size_t cls : classes) {
    ClassOutcome o;
    o.class_id = ev.matrix().classes()[cls];
    o.tuned = true;
    o.chosen_config = ev.matrix_id(def);
    double extra = ev.ground_truth(cls, best->config) - ev.ground_truth(cls, def);
    if (extra > 0.0) {
      o.extra = extra;
      o.chosen_config = ev.matrix_id(best->config);
    }
    r.extra_sum += o.extra;
    r.classes.push_back(std::move(o));
  }
  // Evaluations are attributed to the classes of the evaluation set.
  for (auto& o : r.classes)
    for (std::size_t cls : eval_set)
      if (ev.matrix().classes()[cls] == o.class_id) o.evals_used = r.evals_used / eval_set.size();
  return r;
}

struct RunOptions {
  unsigned threads = 1;
};

/// Runs one strategy over every class of the evaluator's matrix.
inline TuningResult run_strategy(const StrategySpec& spec, const Evaluator& ev, const Ranking* ranking,
                                 double budget_hours, std::uint64_t seed, const RunOptions& opts = {}) {
  if (!(budget_hours >= 0.0)) throw Error("budget_hours must be non-negative");
  const auto& classes = ev.matrix().classes();
  BudgetLedger ledger = BudgetLedger::from_hours(budget_hours);
  const Configuration def = ev.space().default_config();
  const ConfigId def_id = ev.matrix_id(def);

  TuningResult result;
  result.strategy = spec.name();
  result.seed = seed;
  result.budget_hours = budget_hours;
  result.capacity = ledger.capacity();

  auto untuned = [&](const std::string& id) {
    ClassOutcome o;
    o.class_id = id;
    o.chosen_config = def_id;
    return o;
  };

  if (spec.kind == StrategyKind::default_config) {
    for (const auto& id : classes) result.classes.push_back(untuned(id));
    return result;
  }

  if (spec.kind == StrategyKind::global_meta_ga) {
    if (ledger.capacity() < kPopulationSize) {
      for (const auto& id : classes) result.classes.push_back(untuned(id));
      return result;
    }
    std::vector<std::size_t> all(classes.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    Rng rng = derive_rng(seed, {"global"});
    TuningResult g = global_meta_ga(ev, all, ledger.remaining(), rng);
    ledger.spend(g.evals_used);
    g.strategy = result.strategy;
    g.seed = seed;
    g.budget_hours = budget_hours;
    g.capacity = ledger.capacity();
    return g;
  }

  Rng subset_rng = derive_rng(seed, {"subset"});
  auto subset = select_subset(classes, ranking, spec.subset, spec.cutoff, subset_rng);
  std::vector<std::size_t> tuned_idx;
  for (const auto& id : subset) tuned_idx.push_back(ev.matrix().class_index(id));
  std::size_t each = subset.empty() ? 0 : per_class_budget(ledger, subset.size());

  std::vector<ClassTuning> outcomes(tuned_idx.size());
  parallel_for(tuned_idx.size(), opts.threads, [&](std::size_t k) {
    std::size_t cls = tuned_idx[k];
    Rng rng = derive_rng(seed, {"class", std::string_view(classes[cls])});
    switch (spec.kind) {
      case StrategyKind::random_search: outcomes[k] = random_search_class(ev, cls, each, rng); break;
      case StrategyKind::meta_ga: outcomes[k] = meta_ga_class(ev, cls, each, rng); break;
      default: outcomes[k] = de_class(ev, cls, each, rng); break;
    }
  });

  std::vector<std::optional<std::size_t>> slot(classes.size());
  for (std::size_t k = 0; k < tuned_idx.size(); ++k) slot[tuned_idx[k]] = k;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (!slot[c]) {
      result.classes.push_back(untuned(classes[c]));
      continue;
    }
    const auto& t = outcomes[*slot[c]];
    ledger.spend(t.evals_used);
    ClassOutcome o;
    o.class_id = classes[c];
    o.chosen_config = ev.matrix_id(t.chosen);
    o.evals_used = t.evals_used;
    o.extra = t.extra;
    o.tuned = true;
    result.extra_sum += t.extra;
    result.classes.push_back(std::move(o));
  }
  result.evals_used = ledger.spent();
  return result;
}

/// CSV: strategy,seed,budget_hours,class_id,chosen_config_id,evals_used,extra_branches
/// followed by a TOTAL row with an empty config column.
inline std::string tuning_result_to_csv(const TuningResult& r) {
  std::string out = "strategy,seed,budget_hours,class_id,chosen_config_id,evals_used,extra_branches\n";
  std::string prefix = r.strategy + ',' + std::to_string(r.seed) + ',' + text::num(r.budget_hours) + ',';
  for (const auto& c : r.classes)
    out += prefix + c.class_id + ',' + std::to_string(c.chosen_config) + ',' + std::to_string(c.evals_used) + ',' +
           text::num(c.extra) + '\n';
  out += prefix + "TOTAL,," + std::to_string(r.evals_used) + ',' + text::num(r.extra_sum) + '\n';
  return out;
}

}  // namespace tunegain
