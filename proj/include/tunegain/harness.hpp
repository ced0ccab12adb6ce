#pragma once

/// @file harness.hpp
/// @brief Experiment orchestration: repeated train/test splits for ranking
/// quality, budget sweeps across strategies, per-class hyper-parameter
/// importance with a frequency-based elimination schedule, and CSV/SVG
/// reports.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "tunegain/coverage_matrix.hpp"
#include "tunegain/error.hpp"
#include "tunegain/metrics.hpp"
#include "tunegain/parallel.hpp"
#include "tunegain/random.hpp"
#include "tunegain/regression.hpp"
#include "tunegain/search_space.hpp"
#include "tunegain/stats.hpp"
#include "tunegain/strategies.hpp"
#include "tunegain/synthetic.hpp"
#include "tunegain/text.hpp"
#include "tunegain/tuning_gain.hpp"

namespace tunegain {

inline constexpr double kNotApplicable = std::numeric_limits<double>::quiet_NaN();

inline std::string num_or_na(double v) { return std::isnan(v) ? "NA" : text::num(v); }

/// Median ignoring NaN entries; NaN when nothing is left.
inline double median_defined(const std::vector<double>& v) {
  std::vector<double> keep;
  for (double x : v)
    if (!std::isnan(x)) keep.push_back(x);
  return keep.empty() ? kNotApplicable : median(std::move(keep));
}

// ---------------------------------------------------------------------------
// Splits

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

struct SplitPlan {
  std::size_t n_repeats = 100;
  double test_fraction = 0.4;
  std::uint64_t seed = 1;
  std::vector<Split> splits;
};

/// Independent uniform partitions; the test side holds round(fraction * N)
/// classes. Both sides keep the input order of class ids.
inline SplitPlan make_splits(const std::vector<std::string>& class_ids, SplitPlan plan) {
  if (class_ids.size() < 2) throw Error("make_splits: need at least 2 classes");
  if (!(plan.test_fraction > 0.0 && plan.test_fraction < 1.0)) throw Error("make_splits: test fraction must be in (0, 1)");
  const std::size_t n = class_ids.size();
  auto n_test = static_cast<std::size_t>(std::llround(plan.test_fraction * static_cast<double>(n)));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
  plan.splits.clear();
  for (std::size_t r = 0; r < plan.n_repeats; ++r) {
    Rng rng = derive_rng(plan.seed, {"split", r});
    auto pick = sample_without_replacement(rng, n, n_test);
    std::vector<char> is_test(n, 0);
    for (std::size_t i : pick) is_test[i] = 1;
    Split s;
    for (std::size_t i = 0; i < n; ++i) (is_test[i] ? s.test : s.train).push_back(class_ids[i]);
    plan.splits.push_back(std::move(s));
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Ranking quality

struct SelectorConfig {
  ForestParams forest;
  double k_fraction = 0.2;                    // NCG cut-off as a fraction of the test set
  std::vector<std::size_t> rfe_feature_counts;  // extra RFR variants on RFE-selected features
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct MethodSummary {
  std::string method;
  std::vector<double> ncg;        // per repeat; NaN when not applicable
  std::vector<double> auc_ratio;  // per repeat; NaN when not applicable
  double median_ncg = kNotApplicable;
  double median_auc_ratio = kNotApplicable;
  std::size_t applicable = 0;
};

struct Rq1Result {
  std::size_t k = 0;
  std::vector<MethodSummary> methods;

  const MethodSummary& method(const std::string& name) const {
    for (const auto& m : methods)
      if (m.method == name) return m;
    throw Error("no method '" + name + "' in result");
  }
};

/// Predicted-gain ranking of `test` classes using a forest trained on `train`.
inline Ranking forest_ranking(const FeatureTable& features, const std::vector<std::string>& train,
                              const std::vector<std::string>& test, const std::map<std::string, double>& gains,
                              const ForestParams& params, std::uint64_t seed) {
  auto model = fit_forest(make_dataset(features, train, gains), params, seed);
  auto pred = model.predict(make_dataset(features, test, {}));
  std::map<std::string, double> scores;
  for (std::size_t i = 0; i < test.size(); ++i) scores[test[i]] = pred[i];
  return rank_classes(scores, "rfr");
}

inline Rq1Result rq1_pipeline(const CoverageMatrix& matrix, const FeatureTable& features, const SplitPlan& plan,
                              const SelectorConfig& cfg) {
  for (const auto& id : matrix.classes())
    if (!features.find(id)) throw Error("rq1: no feature vector for class '" + id + "'");
  if (plan.splits.empty()) throw Error("rq1: split plan has no repeats");
  for (std::size_t k : cfg.rfe_feature_counts)
    if (k < 1 || k > features.names.size()) throw Error("rq1: RFE feature count out of range");
  const auto gains = gain_map(compute_gains(matrix));

  std::vector<std::string> names = {"optimal", "rfr", "lr", "random"};
  for (std::size_t k : cfg.rfe_feature_counts) names.push_back("rfr_rfe" + std::to_string(k));
  const std::size_t n_test = plan.splits.front().test.size();
  const std::size_t k = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(cfg.k_fraction * static_cast<double>(n_test))), 1, n_test);

  const std::size_t reps = plan.splits.size();
  std::vector<std::vector<double>> ncg_v(names.size(), std::vector<double>(reps, kNotApplicable));
  std::vector<std::vector<double>> auc_v = ncg_v;
  ForestParams fp = cfg.forest;
  fp.threads = 1;

  parallel_for(reps, cfg.threads, [&](std::size_t r) {
    const auto& split = plan.splits[r];
    std::map<std::string, double> test_gains;
    for (const auto& id : split.test) test_gains[id] = gains.at(id);
    std::vector<Ranking> rankings;
    rankings.push_back(rank_classes(test_gains, "optimal"));
    rankings.push_back(forest_ranking(features, split.train, split.test, gains, fp, derive_seed(cfg.seed, {"rfr", r})));

    auto lr = fit_linear(make_dataset(features, split.train, gains));
    auto lr_pred = lr.predict(make_dataset(features, split.test, {}));
    std::map<std::string, double> lr_scores;
    for (std::size_t i = 0; i < split.test.size(); ++i) lr_scores[split.test[i]] = lr_pred[i];
    rankings.push_back(rank_classes(lr_scores, "lr"));

    Rng rng = derive_rng(cfg.seed, {"random", r});
    Ranking rnd;
    rnd.method = "random";
    for (std::size_t i : sample_without_replacement(rng, split.test.size(), split.test.size()))
      rnd.order.push_back(split.test[i]);
    rankings.push_back(std::move(rnd));

    if (!cfg.rfe_feature_counts.empty()) {
      std::size_t smallest = *std::min_element(cfg.rfe_feature_counts.begin(), cfg.rfe_feature_counts.end());
      auto train = make_dataset(features, split.train, gains);
      auto path = rfe(train, smallest, fp, derive_seed(cfg.seed, {"rfe", r}));
      for (std::size_t kk : cfg.rfe_feature_counts) {
        auto keep = path.surviving_at(features.names, kk);
        FeatureTable sub;
        sub.names = keep;
        for (const auto& row : features.rows) {
          FeatureVector v;
          v.class_id = row.class_id;
          for (const auto& f : row.features)
            if (std::find(keep.begin(), keep.end(), f.first) != keep.end()) v.features.push_back(f);
          sub.rows.push_back(std::move(v));
        }
        rankings.push_back(
            forest_ranking(sub, split.train, split.test, gains, fp, derive_seed(cfg.seed, {"rfr_rfe", r, kk})));
      }
    }

    for (std::size_t m = 0; m < rankings.size(); ++m) {
      try {
        ncg_v[m][r] = ncg(rankings[m], test_gains, k);
        auc_v[m][r] = auc_ratio(rankings[m], test_gains);
      } catch (const UndefinedMetric&) {
      }
    }
  });

  Rq1Result res;
  res.k = k;
  for (std::size_t m = 0; m < names.size(); ++m) {
    MethodSummary s;
    s.method = names[m];
    s.ncg = ncg_v[m];
    s.auc_ratio = auc_v[m];
    s.median_ncg = median_defined(s.ncg);
    s.median_auc_ratio = median_defined(s.auc_ratio);
    s.applicable = static_cast<std::size_t>(std::count_if(s.ncg.begin(), s.ncg.end(), [](double v) { return !std::isnan(v); }));
    res.methods.push_back(std::move(s));
  }
  return res;
}

inline std::string rq1_to_csv(const Rq1Result& r) {
  std::string out = "method,k,median_ncg,median_auc_ratio,applicable_repeats\n";
  for (const auto& m : r.methods)
    out += m.method + ',' + std::to_string(r.k) + ',' + num_or_na(m.median_ncg) + ',' + num_or_na(m.median_auc_ratio) +
           ',' + std::to_string(m.applicable) + '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Budget sweeps

/// Unit-width rectangle sum over budget points.
inline double curve_auc(const std::vector<double>& curve) {
  double s = 0.0;
  for (double v : curve) s += v;
  return s;
}

inline double average_ecb(double auc, std::size_t n_budgets) {
  if (n_budgets == 0) throw Error("average_ecb: no budget points");
  return auc / static_cast<double>(n_budgets);
}

struct BudgetSweep {
  std::vector<double> budgets;  // hours, strictly increasing
  std::vector<StrategySpec> strategies;
  std::size_t reps = 25;
  std::uint64_t seed = 1;
  std::string reference = "pri_mg";  // p-values compare against this strategy
  unsigned threads = 1;

  static std::vector<double> hours(double from, double to, double step = 1.0) {
    std::vector<double> out;
    for (double h = from; h <= to + 1e-9; h += step) out.push_back(h);
    return out;
  }
};

struct SweepPoint {
  std::string strategy;
  double budget_hours = 0;
  std::vector<double> totals;  // per rep
  double median_extra = 0;
  std::size_t max_evals_used = 0;
  std::size_t capacity = 0;
};

struct ReportRow {
  std::string strategy;
  double budget_hours = 0;
  double median_extra = 0;
  double auc = 0;
  double average_ecb = 0;
  double p_value = kNotApplicable;
};

struct Curve {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct SweepResult {
  std::vector<SweepPoint> points;  // strategy-major, budget-minor
  std::vector<ReportRow> rows;
  std::vector<Curve> curves;
  std::size_t budget_violations = 0;
};

inline SweepResult budget_sweep(const Evaluator& ev, const Ranking* ranking, const BudgetSweep& sweep) {
  if (sweep.budgets.empty()) throw Error("sweep: no budgets");
  for (std::size_t i = 0; i < sweep.budgets.size(); ++i) {
    if (!(sweep.budgets[i] > 0.0)) throw Error("sweep: budgets must be positive");
    if (i && !(sweep.budgets[i] > sweep.budgets[i - 1])) throw Error("sweep: budgets must be strictly increasing");
  }
  if (sweep.strategies.empty()) throw Error("sweep: no strategies");
  if (sweep.reps < 1) throw Error("sweep: reps must be positive");
  for (const auto& s : sweep.strategies)
    if (s.needs_ranking() && !ranking) throw Error("sweep: strategy " + s.name() + " needs a ranking");

  const std::size_t nb = sweep.budgets.size(), ns = sweep.strategies.size(), nr = sweep.reps;
  std::vector<double> totals(ns * nb * nr);
  std::vector<std::size_t> used(ns * nb * nr);
  parallel_for(totals.size(), sweep.threads, [&](std::size_t job) {
    std::size_t s = job / (nb * nr), b = (job / nr) % nb, r = job % nr;
    const auto& spec = sweep.strategies[s];
    auto budget_key = static_cast<std::uint64_t>(std::llround(sweep.budgets[b] * 1e6));
    std::uint64_t seed = derive_seed(sweep.seed, {std::string_view(spec.name()), budget_key, r});
    auto res = run_strategy(spec, ev, ranking, sweep.budgets[b], seed);
    totals[job] = res.extra_sum;
    used[job] = res.evals_used;
  });

  SweepResult out;
  for (std::size_t s = 0; s < ns; ++s) {
    Curve curve;
    curve.name = sweep.strategies[s].name();
    for (std::size_t b = 0; b < nb; ++b) {
      SweepPoint p;
      p.strategy = curve.name;
      p.budget_hours = sweep.budgets[b];
      p.capacity = BudgetLedger::from_hours(p.budget_hours).capacity();
      for (std::size_t r = 0; r < nr; ++r) {
        std::size_t job = (s * nb + b) * nr + r;
        p.totals.push_back(totals[job]);
        p.max_evals_used = std::max(p.max_evals_used, used[job]);
        if (used[job] > p.capacity) ++out.budget_violations;
      }
      p.median_extra = median(p.totals);
      curve.x.push_back(p.budget_hours);
      curve.y.push_back(p.median_extra);
      out.points.push_back(std::move(p));
    }
    out.curves.push_back(std::move(curve));
  }

  std::optional<std::size_t> ref;
  for (std::size_t s = 0; s < ns; ++s)
    if (sweep.strategies[s].name() == sweep.reference) ref = s;
  for (std::size_t s = 0; s < ns; ++s) {
    double auc = curve_auc(out.curves[s].y);
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& p = out.points[s * nb + b];
      ReportRow row;
      row.strategy = p.strategy;
      row.budget_hours = p.budget_hours;
      row.median_extra = p.median_extra;
      row.auc = auc;
      row.average_ecb = average_ecb(auc, nb);
      if (ref && *ref != s) row.p_value = mann_whitney_u(p.totals, out.points[*ref * nb + b].totals).p;
      out.rows.push_back(row);
    }
  }
  return out;
}

inline std::string report_to_csv(const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw Error("report: no rows");
  std::string out = "strategy,budget_hours,median_extra,auc,average_ecb,p_value\n";
  for (const auto& r : rows)
    out += r.strategy + ',' + text::num(r.budget_hours) + ',' + text::num(r.median_extra) + ',' + text::num(r.auc) +
           ',' + text::num(r.average_ecb) + ',' + num_or_na(r.p_value) + '\n';
  return out;
}

inline void emit_report(const std::vector<ReportRow>& rows, const std::string& path) {
  text::write_file(path, report_to_csv(rows));
}

/// Standalone SVG 1.1 line chart, 800x500, one polyline per curve.
inline std::string curves_to_svg(const std::vector<Curve>& curves, const std::string& x_label = "Tuning budget (hours)",
                                 const std::string& y_label = "Extra covered branches") {
  if (curves.empty()) throw Error("svg: no curves");
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y1 = 0.0;
  for (const auto& c : curves) {
    if (c.x.size() != c.y.size()) throw Error("svg: curve '" + c.name + "' has mismatched x/y");
    for (double v : c.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : c.y) y1 = std::max(y1, v);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1;
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= 0) y1 = 1;
  const double left = 70, right = 620, top = 30, bottom = 440;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (right - left); };
  auto py = [&](double y) { return bottom - y / y1 * (bottom - top); };

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" height=\"500\" viewBox=\"0 0 800 500\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n";
  s += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"black\"/>\n", left, bottom, right);
  s += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", left, bottom, top);
  for (int t = 0; t <= 4; ++t) {
    double xv = x0 + (x1 - x0) * t / 4.0, yv = y1 * t / 4.0;
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"11\" text-anchor=\"middle\">{:.4g}</text>\n", px(xv),
                     bottom + 16, xv);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"11\" text-anchor=\"end\">{:.4g}</text>\n", left - 6,
                     py(yv) + 4, yv);
  }
  s += fmt::format("<text x=\"{:.2f}\" y=\"480\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
                   (left + right) / 2, x_label);
  s += fmt::format(
      "<text x=\"18\" y=\"{:.2f}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2f})\">{}</text>\n",
      (top + bottom) / 2, (top + bottom) / 2, y_label);
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const char* color = palette[i % 10];
    s += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"", color);
    for (std::size_t k = 0; k < curves[i].x.size(); ++k) {
      if (k) s += ' ';
      s += fmt::format("{:.2f},{:.2f}", px(curves[i].x[k]), py(curves[i].y[k]));
    }
    s += "\"/>\n";
    double ly = 40 + 20.0 * static_cast<double>(i);
    s += fmt::format("<line x1=\"640\" y1=\"{0:.2f}\" x2=\"665\" y2=\"{0:.2f}\" stroke=\"{1}\" stroke-width=\"2\"/>\n", ly,
                     color);
    s += fmt::format("<text x=\"672\" y=\"{:.2f}\" font-size=\"12\">{}</text>\n", ly + 4, curves[i].name);
  }
  s += "</svg>\n";
  return s;
}

inline void emit_svg(const std::vector<Curve>& curves, const std::string& path) {
  text::write_file(path, curves_to_svg(curves));
}

// ---------------------------------------------------------------------------
// Hyper-parameter importance

/// Importance of each search-space parameter for one class: a forest fit on
/// every grid point (ordinal gene indices as features, median coverage as
/// target). Pinned parameters of a reduced space do not appear.
inline Importance hp_importance(const Evaluator& ev, std::size_t cls, const ForestParams& params, std::uint64_t seed) {
  const auto& space = ev.space();
  std::vector<std::string> names;
  for (const auto& p : space.params()) names.push_back(p.name);
  std::vector<double> x, y;
  x.reserve(static_cast<std::size_t>(space.size()) * space.dimension());
  for (ConfigId id = 0; id < space.size(); ++id) {
    auto c = space.decode(id);
    for (std::size_t g : c.genes) x.push_back(static_cast<double>(g));
    y.push_back(ev.ground_truth(cls, c));
  }
  return fit_forest(Dataset(std::move(names), std::move(x), std::move(y)), params, seed).feature_importance();
}

inline Importance hp_importance(const CoverageMatrix& m, const std::string& class_id, const ForestParams& params,
                                std::uint64_t seed) {
  return hp_importance(Evaluator(m), m.class_index(class_id), params, seed);
}

struct EliminationRound {
  std::map<std::string, std::size_t> least_important_counts;
  std::string dropped;
  std::vector<std::string> keep;  // parameters left after the drop
  std::uint64_t space_size = 0;   // size of the space after the drop
};

struct EliminationSchedule {
  std::vector<EliminationRound> rounds;
  std::vector<std::string> drop_order;
  std::vector<std::string> survivors;

  /// Keep-set after `drops` eliminations (1 = Large, 2 = Medium, 3 = Small).
  std::set<std::string> keep_after(std::size_t drops) const {
    if (drops == 0 || drops > rounds.size()) throw Error("no elimination round " + std::to_string(drops));
    const auto& k = rounds[drops - 1].keep;
    return {k.begin(), k.end()};
  }
};

/// Repeatedly drops the parameter most often ranked least important across
/// classes (ties: lexicographically first), refitting on the reduced space
/// each round, until one parameter is left.
inline EliminationSchedule hp_elimination_schedule(const CoverageMatrix& m, const std::vector<std::string>& classes,
                                                   const ForestParams& params, std::uint64_t seed,
                                                   unsigned threads = 1) {
  if (classes.empty()) throw Error("elimination schedule: no classes");
  EliminationSchedule sched;
  HyperParameterSpace space = m.space();
  ForestParams fp = params;
  fp.threads = 1;
  for (std::size_t round = 0; space.dimension() > 1; ++round) {
    Evaluator ev(m, space);
    std::vector<std::optional<std::string>> least(classes.size());
    parallel_for(classes.size(), threads, [&](std::size_t i) {
      auto imp = hp_importance(ev, m.class_index(classes[i]), fp, derive_seed(seed, {"hp", round, std::string_view(classes[i])}));
      if (imp.degenerate) return;
      std::size_t arg = 0;
      for (std::size_t p = 1; p < imp.values.size(); ++p) {
        const auto& name = space.params()[p].name;
        if (imp.values[p] < imp.values[arg] ||
            (imp.values[p] == imp.values[arg] && name < space.params()[arg].name))
          arg = p;
      }
      least[i] = space.params()[arg].name;
    });
    EliminationRound er;
    bool any = false;
    for (const auto& p : space.params()) er.least_important_counts[p.name] = 0;
    for (const auto& l : least)
      if (l) {
        any = true;
        ++er.least_important_counts[*l];
      }
    if (!any) {
      if (round == 0) throw Error("elimination schedule: every class has constant coverage");
      break;
    }
    std::size_t best = 0;
    for (const auto& [name, count] : er.least_important_counts)
      if (count > best) {
        best = count;
        er.dropped = name;
      }
    std::set<std::string> keep;
    for (const auto& p : space.params())
      if (p.name != er.dropped) {
        keep.insert(p.name);
        er.keep.push_back(p.name);
      }
    space = space.reduce(keep);
    er.space_size = space.size();
    sched.drop_order.push_back(er.dropped);
    sched.rounds.push_back(std::move(er));
  }
  for (const auto& p : space.params()) sched.survivors.push_back(p.name);
  return sched;
}

}  // namespace tunegain
