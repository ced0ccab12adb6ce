#include <gtest/gtest.h>

#include <cmath>
#include <regex>
#include <set>

#include "test_util.hpp"
#include "tunegain/harness.hpp"

using namespace tunegain;
using testutil::build_matrix;
using testutil::class_names;

namespace {

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST(Splits, SizesAndPartition) {
  auto ids = class_names(250);
  SplitPlan plan;
  plan.n_repeats = 5;
  plan = make_splits(ids, plan);
  ASSERT_EQ(plan.splits.size(), 5u);
  for (const auto& s : plan.splits) {
    EXPECT_EQ(s.test.size(), 100u);
    EXPECT_EQ(s.train.size(), 150u);
    std::set<std::string> all(s.train.begin(), s.train.end());
    for (const auto& t : s.test) EXPECT_TRUE(all.insert(t).second);
    EXPECT_EQ(all.size(), 250u);
  }
  EXPECT_NE(plan.splits[0].test, plan.splits[1].test);
}

TEST(Splits, DeterministicAndValidated) {
  auto ids = class_names(10);
  SplitPlan p;
  p.n_repeats = 2;
  p.seed = 5;
  auto a = make_splits(ids, p), b = make_splits(ids, p);
  for (std::size_t r = 0; r < 2; ++r) EXPECT_EQ(a.splits[r].test, b.splits[r].test);
  p.test_fraction = 1.0;
  EXPECT_THROW(make_splits(ids, p), Error);
  p.test_fraction = 0.0;
  EXPECT_THROW(make_splits(ids, p), Error);
  p.test_fraction = 0.4;
  EXPECT_THROW(make_splits({"only"}, p), Error);
}

TEST(Rq1, OptimalIsOneAndDominates) {
  LandscapeSpec spec;
  spec.n_classes = 60;
  auto d = generate(spec, builtin_space());
  SplitPlan plan;
  plan.n_repeats = 6;
  plan = make_splits(d.matrix.classes(), plan);
  SelectorConfig cfg;
  cfg.forest.n_trees = 30;
  cfg.rfe_feature_counts = {5};
  auto r = rq1_pipeline(d.matrix, d.features, plan, cfg);
  EXPECT_EQ(r.k, 5u);  // 20% of 24 test classes
  const auto& opt = r.method("optimal");
  EXPECT_EQ(opt.median_ncg, 1.0);
  EXPECT_EQ(opt.median_auc_ratio, 1.0);
  for (const auto& m : r.methods) {
    EXPECT_EQ(m.applicable, 6u);
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_LE(m.ncg[i], 1.0);
      EXPECT_LE(m.auc_ratio[i], 1.0);
    }
  }
  EXPECT_NO_THROW(r.method("rfr_rfe5"));
  EXPECT_THROW(r.method("nope"), Error);
  EXPECT_GT(r.method("rfr").median_auc_ratio, r.method("random").median_auc_ratio);
  auto csv = rq1_to_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "method,k,median_ncg,median_auc_ratio,applicable_repeats");
  EXPECT_EQ(count(csv, "\n"), 6u);
}

TEST(Rq1, AllZeroGainsAreNotApplicable) {
  auto spec = LandscapeSpec{};
  spec.n_classes = 10;
  spec.insensitive_fraction = 1;
  spec.sparse_fraction = spec.tunable_fraction = 0;
  spec.seed_noise = 0;
  auto d = generate(spec, builtin_space());
  SplitPlan plan;
  plan.n_repeats = 3;
  plan = make_splits(d.matrix.classes(), plan);
  SelectorConfig cfg;
  cfg.forest.n_trees = 5;
  auto r = rq1_pipeline(d.matrix, d.features, plan, cfg);
  for (const auto& m : r.methods) {
    EXPECT_EQ(m.applicable, 0u);
    EXPECT_TRUE(std::isnan(m.median_ncg));
  }
  EXPECT_NE(rq1_to_csv(r).find(",NA,NA,0"), std::string::npos);
}

TEST(Rq1, MissingFeaturesRejected) {
  LandscapeSpec spec;
  spec.n_classes = 5;
  auto d = generate(spec, builtin_space());
  d.features.rows.pop_back();
  SplitPlan plan;
  plan.n_repeats = 1;
  plan = make_splits(d.matrix.classes(), plan);
  EXPECT_THROW(rq1_pipeline(d.matrix, d.features, plan, SelectorConfig{}), Error);
}

TEST(AverageEcb, Arithmetic) {
  EXPECT_DOUBLE_EQ(average_ecb(23.52, 24), 0.98);
  std::vector<double> zeros(24, 0.0), twos(24, 2.0);
  EXPECT_EQ(curve_auc(zeros), 0.0);
  EXPECT_EQ(average_ecb(curve_auc(zeros), 24), 0.0);
  EXPECT_EQ(curve_auc(twos), 48.0);
  EXPECT_EQ(average_ecb(curve_auc(twos), 24), 2.0);
  EXPECT_THROW(average_ecb(1, 0), Error);
}

TEST(AverageEcb, TimesBudgetsEqualsAuc) {
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> c(1 + uniform_index(rng, 30));
    for (auto& v : c) v = std::round(uniform01(rng) * 10000) / 100;
    double auc = curve_auc(c);
    EXPECT_NEAR(average_ecb(auc, c.size()) * static_cast<double>(c.size()), auc, 1e-9);
  }
}

TEST(Sweep, ReportRowsAndSoundness) {
  LandscapeSpec spec;
  spec.n_classes = 20;
  auto d = generate(spec, builtin_space());
  Evaluator ev(d.matrix);
  auto ranking = rank_classes(gain_map(d.gains));
  BudgetSweep sw;
  sw.budgets = BudgetSweep::hours(1, 4);
  for (const auto& n : all_strategy_names()) sw.strategies.push_back(StrategySpec::parse(n, 0.2));
  sw.reps = 5;
  auto r = budget_sweep(ev, &ranking, sw);
  EXPECT_EQ(r.rows.size(), 32u);
  EXPECT_EQ(r.budget_violations, 0u);
  for (const auto& p : r.points) EXPECT_LE(p.max_evals_used, p.capacity);
  for (const auto& row : r.rows) {
    EXPECT_NEAR(row.average_ecb * 4, row.auc, 1e-9);
    if (row.strategy == "default") {
      EXPECT_EQ(row.median_extra, 0.0);
    }
    EXPECT_EQ(std::isnan(row.p_value), row.strategy == "pri_mg");
  }
  auto csv = report_to_csv(r.rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "strategy,budget_hours,median_extra,auc,average_ecb,p_value");
  EXPECT_EQ(count(csv, "\n"), 33u);

  sw.threads = 3;
  EXPECT_EQ(report_to_csv(budget_sweep(ev, &ranking, sw).rows), csv);
}

TEST(Sweep, Validation) {
  HyperParameterSpace space({{"a", {"0", "1"}, 0}});
  auto m = build_matrix(space, {"A"}, 1, [](auto, auto&, auto) { return 1; });
  Evaluator ev(m);
  BudgetSweep sw;
  sw.strategies = {StrategySpec::parse("rnd_rs")};
  EXPECT_THROW(budget_sweep(ev, nullptr, sw), Error);
  sw.budgets = {2, 1};
  EXPECT_THROW(budget_sweep(ev, nullptr, sw), Error);
  sw.budgets = {0, 1};
  EXPECT_THROW(budget_sweep(ev, nullptr, sw), Error);
  sw.budgets = {1};
  sw.strategies = {StrategySpec::parse("pri_rs")};
  EXPECT_THROW(budget_sweep(ev, nullptr, sw), Error);
  EXPECT_THROW(report_to_csv({}), Error);
  EXPECT_EQ(BudgetSweep::hours(1, 24).size(), 24u);
}

TEST(Svg, Structure) {
  std::vector<Curve> curves(2);
  for (int i = 0; i < 2; ++i) {
    curves[i].name = i ? "pri_mg" : "default";
    for (int h = 1; h <= 24; ++h) {
      curves[i].x.push_back(h);
      curves[i].y.push_back(i * h * 0.5);
    }
  }
  auto svg = curves_to_svg(curves);
  EXPECT_EQ(svg, curves_to_svg(curves));
  EXPECT_NE(svg.find("version=\"1.1\""), std::string::npos);
  EXPECT_NE(svg.find("width=\"800\" height=\"500\""), std::string::npos);
  EXPECT_EQ(count(svg, "<polyline"), 2u);
  std::regex pts("points=\"([^\"]*)\"");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), pts); it != std::sregex_iterator(); ++it)
    EXPECT_EQ(count((*it)[1].str(), ",") , 24u);
  EXPECT_NE(svg.find(">pri_mg</text>"), std::string::npos);
  EXPECT_NE(svg.find("Tuning budget (hours)"), std::string::npos);
  EXPECT_THROW(curves_to_svg({}), Error);
  EXPECT_THROW(emit_svg(curves, "/nonexistent_dir/x.svg"), Error);
}

TEST(HpImportance, ConstantClassIsDegenerate) {
  auto space = builtin_space();
  auto m = build_matrix(space, {"K"}, 2, [](auto, auto&, auto) { return 9; });
  auto imp = hp_importance(m, "K", ForestParams{}, 1);
  EXPECT_TRUE(imp.degenerate);
  for (double v : imp.values) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(hp_importance(m, "missing", ForestParams{}, 1), Error);
}

TEST(HpImportance, SingleDrivingParameter) {
  auto space = builtin_space();
  auto m = build_matrix(space, {"P"}, 3, [](auto, const Configuration& c, std::size_t s) {
    static const long long level[] = {40, 90, 70, 10, 55};
    return level[c.genes[1]] + static_cast<long long>(s % 2);
  });
  auto imp = hp_importance(m, "P", ForestParams{}, 3);
  EXPECT_FALSE(imp.degenerate);
  EXPECT_GE(imp.values[1], 0.9);
  double sum = 0;
  for (double v : imp.values) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(HpElimination, DrivingParameterSurvives) {
  auto space = builtin_space();
  auto m = build_matrix(space, class_names(3), 1, [](std::size_t cls, const Configuration& c, auto) {
    return static_cast<long long>(20 + 15 * ((c.genes[3] + cls) % 5));
  });
  ForestParams fp;
  fp.n_trees = 50;
  auto sched = hp_elimination_schedule(m, m.classes(), fp, 1);
  EXPECT_EQ(sched.drop_order.size(), 4u);
  EXPECT_EQ(sched.survivors, (std::vector<std::string>{"selection_function"}));
  EXPECT_EQ(sched.rounds[0].space_size, space.reduce(sched.keep_after(1)).size());
  EXPECT_EQ(sched.keep_after(1).size(), 4u);
  EXPECT_THROW(sched.keep_after(0), Error);
  EXPECT_THROW(sched.keep_after(5), Error);
}

TEST(HpElimination, AllConstantRejectedAndTwoParameterBound) {
  HyperParameterSpace two({{"a", {"0", "1", "2"}, 0}, {"b", {"x", "y"}, 0}});
  auto flat = build_matrix(two, {"F"}, 1, [](auto, auto&, auto) { return 3; });
  EXPECT_THROW(hp_elimination_schedule(flat, {"F"}, ForestParams{}, 1), Error);
  auto m = build_matrix(two, {"G"}, 1, [](auto, const Configuration& c, auto) { return 5 * static_cast<long long>(c.genes[0]); });
  auto s = hp_elimination_schedule(m, {"G"}, ForestParams{}, 1);
  EXPECT_EQ(s.drop_order, (std::vector<std::string>{"b"}));
  EXPECT_EQ(s.survivors, (std::vector<std::string>{"a"}));
}
