// tunegain: command-line front end for class prioritization and budgeted
// hyper-parameter tuning experiments over replayed coverage data.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tunegain/tunegain.hpp"

namespace fs = std::filesystem;
using namespace tunegain;
using json = nlohmann::ordered_json;

namespace {

struct Common {
  std::string out;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

struct Paths {
  std::string matrix, space, features, ranking;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--out", c.out, "Output directory")->required();
  cmd->add_option("--seed", c.seed, "Master random seed")->capture_default_str();
  cmd->add_option("--threads", c.threads, "Worker threads (0: TUNEGAIN_THREADS or hardware)")->capture_default_str();
}

fs::path prepare_out(const Common& c) {
  fs::path dir(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw Error("cannot create output directory '" + c.out + "'");
  return dir;
}

/// Records the fully resolved invocation; thread count is scheduling only
/// and is left out so outputs stay identical across pool sizes.
void write_config(const fs::path& dir, const std::string& subcommand, const CLI::App* cmd) {
  json j;
  j["subcommand"] = subcommand;
  json opts = json::object();
  for (const CLI::Option* opt : cmd->get_options()) {
    if (opt->get_lnames().empty()) continue;
    std::string name = opt->get_lnames().front();
    if (name == "help" || name == "threads" || name == "out") continue;
    auto results = opt->results();
    std::string value = results.empty() ? opt->get_default_str() : results.back();
    opts[name] = value;
  }
  j["options"] = opts;
  text::write_file((dir / "config.json").string(), j.dump(2) + "\n");
}

HyperParameterSpace load_space(const std::string& path) {
  return path.empty() ? builtin_space() : HyperParameterSpace::from_json(text::read_file(path));
}

Ranking load_ranking(const std::string& path) {
  auto rows = text::lines(text::read_file(path));
  if (rows.empty() || rows[0] != "rank,class_id,score") throw Error("ranking: bad header in '" + path + "'");
  Ranking r;
  r.method = "file";
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].empty()) continue;
    auto cells = text::split(rows[i]);
    if (cells.size() != 3) throw Error("ranking: line " + std::to_string(i + 1) + ": expected 3 fields");
    r.order.push_back(cells[1]);
  }
  return r;
}

std::string ranking_to_csv(const Ranking& r, const std::map<std::string, double>& scores) {
  std::string out = "rank,class_id,score\n";
  for (std::size_t i = 0; i < r.order.size(); ++i)
    out += std::to_string(i + 1) + ',' + r.order[i] + ',' + text::num(scores.at(r.order[i])) + '\n';
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto& part : text::split(s)) {
    auto t = std::string(text::trim(part));
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

/// "1..24", "1..24:2" or "1,2,4".
std::vector<double> parse_budgets(const std::string& s) {
  auto dots = s.find("..");
  std::vector<double> out;
  if (dots != std::string::npos) {
    double from, to, step = 1.0;
    std::string rest = s.substr(dots + 2);
    auto colon = rest.find(':');
    if (!text::parse_double(s.substr(0, dots), from) ||
        !text::parse_double(rest.substr(0, colon), to) ||
        (colon != std::string::npos && !text::parse_double(rest.substr(colon + 1), step)) || !(step > 0.0))
      throw CLI::ValidationError("--budgets", "expected FROM..TO[:STEP] or a comma list");
    return BudgetSweep::hours(from, to, step);
  }
  for (const auto& p : split_list(s)) {
    double v;
    if (!text::parse_double(p, v)) throw CLI::ValidationError("--budgets", "bad budget '" + p + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::size_t> parse_counts(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& p : split_list(s)) {
    long long v;
    if (!text::parse_int(p, v) || v < 1) throw CLI::ValidationError("--rfe-k", "bad feature count '" + p + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Class prioritization and budgeted hyper-parameter tuning over replayed coverage data", "tunegain"};
  app.require_subcommand(1);

  Common common;
  Paths paths;
  ForestParams forest;
  std::size_t trees = 200, depth = 5;

  // extract
  std::string src_dir, external_csv, keywords_file;
  auto* extract = app.add_subcommand("extract", "Native static metrics for a tree of .java files");
  add_common(extract, common);
  extract->add_option("--src", src_dir, "Root directory of Java sources")->required()->check(CLI::ExistingDirectory);
  extract->add_option("--external", external_csv, "Externally computed metrics CSV to merge")->check(CLI::ExistingFile);
  extract->add_option("--keywords", keywords_file, "Keyword list file (one per line)")->check(CLI::ExistingFile);

  // gain
  auto* gain = app.add_subcommand("gain", "Tuning Gain per class from a coverage matrix");
  add_common(gain, common);
  gain->add_option("--matrix", paths.matrix, "Coverage matrix CSV")->required()->check(CLI::ExistingFile);
  gain->add_option("--space", paths.space, "Space manifest JSON (default: builtin grid)")->check(CLI::ExistingFile);

  // prioritize
  std::string train_gains, targets_file, model_kind = "rfr";
  std::size_t target_k = 0;
  auto* prioritize = app.add_subcommand("prioritize", "Rank classes by predicted Tuning Gain");
  add_common(prioritize, common);
  prioritize->add_option("--features", paths.features, "Feature CSV")->required()->check(CLI::ExistingFile);
  prioritize->add_option("--train-gains", train_gains, "Gain CSV of training classes")->required()->check(CLI::ExistingFile);
  prioritize->add_option("--targets", targets_file, "Class ids to rank, one per line (default: classes without gains)")
      ->check(CLI::ExistingFile);
  prioritize->add_option("--model", model_kind, "rfr or lr")->check(CLI::IsMember({"rfr", "lr"}))->capture_default_str();
  prioritize->add_option("--trees", trees, "Forest size")->capture_default_str();
  prioritize->add_option("--depth", depth, "Maximum tree depth")->capture_default_str();
  prioritize->add_option("--target-k", target_k, "Keep this many features via RFE (0: all)")->capture_default_str();

  // tune
  std::string strategy;
  double cutoff = 0.2, budget_hours = 1.0;
  auto* tune = app.add_subcommand("tune", "Run one tuning strategy under a budget");
  add_common(tune, common);
  tune->add_option("--matrix", paths.matrix, "Coverage matrix CSV")->required()->check(CLI::ExistingFile);
  tune->add_option("--space", paths.space, "Space manifest JSON (default: builtin grid)")->check(CLI::ExistingFile);
  tune->add_option("--ranking", paths.ranking, "Ranking CSV (default: rank by matrix Tuning Gain)")->check(CLI::ExistingFile);
  std::vector<std::string> strategy_names = all_strategy_names();
  for (const char* n : {"all_rs", "all_mg", "all_de"}) strategy_names.emplace_back(n);
  tune->add_option("--strategy", strategy, "default, glob_mg, {pri,rnd,all}_{rs,mg,de}")
      ->required()
      ->check(CLI::IsMember(strategy_names));
  tune->add_option("--cutoff", cutoff, "Fraction of classes tuned")->capture_default_str();
  tune->add_option("--budget-hours", budget_hours, "Total tuning budget in hours")->capture_default_str();

  // sweep
  std::string strategies_list = "default,glob_mg,rnd_rs,rnd_mg,rnd_de,pri_rs,pri_mg,pri_de", budgets_spec = "1..24",
              reference = "pri_mg";
  std::size_t reps = 25;
  auto* sweep = app.add_subcommand("sweep", "Budget sweep across strategies");
  add_common(sweep, common);
  sweep->add_option("--matrix", paths.matrix, "Coverage matrix CSV")->required()->check(CLI::ExistingFile);
  sweep->add_option("--space", paths.space, "Space manifest JSON (default: builtin grid)")->check(CLI::ExistingFile);
  sweep->add_option("--ranking", paths.ranking, "Ranking CSV (default: rank by matrix Tuning Gain)")->check(CLI::ExistingFile);
  sweep->add_option("--strategies", strategies_list, "Comma-separated strategy names")->capture_default_str();
  sweep->add_option("--budgets", budgets_spec, "Budgets in hours: FROM..TO[:STEP] or a comma list")->capture_default_str();
  sweep->add_option("--reps", reps, "Repetitions per point")->capture_default_str();
  sweep->add_option("--cutoff", cutoff, "Fraction of classes tuned by subset strategies")->capture_default_str();
  sweep->add_option("--reference", reference, "Strategy the p-values compare against")->capture_default_str();

  // synth
  LandscapeSpec spec;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic matrix, features and true gains");
  add_common(synth, common);
  synth->add_option("--space", paths.space, "Space manifest JSON (default: builtin grid)")->check(CLI::ExistingFile);
  synth->add_option("--classes", spec.n_classes, "Number of classes")->capture_default_str();
  synth->add_option("--insensitive", spec.insensitive_fraction, "Fraction of insensitive classes")->capture_default_str();
  synth->add_option("--sparse", spec.sparse_fraction, "Fraction of sparse-optimum classes")->capture_default_str();
  synth->add_option("--tunable", spec.tunable_fraction, "Fraction of tunable classes")->capture_default_str();
  synth->add_option("--base-min", spec.base_min, "Minimum base coverage")->capture_default_str();
  synth->add_option("--base-max", spec.base_max, "Maximum base coverage")->capture_default_str();
  synth->add_option("--boost-min", spec.boost_min, "Minimum boost")->capture_default_str();
  synth->add_option("--boost-max", spec.boost_max, "Maximum boost")->capture_default_str();
  synth->add_option("--sparse-configs", spec.n_sparse_configs, "Boosted configurations per sparse class")
      ->capture_default_str();
  synth->add_option("--noise", spec.seed_noise, "Seed noise std-dev (branches)")->capture_default_str();
  synth->add_option("--seeds-per-pair", spec.seeds_per_pair, "Observations per (class, config)")->capture_default_str();
  synth->add_option("--noise-features", spec.n_noise_features, "Pure-noise feature columns")->capture_default_str();

  // rq1
  SplitPlan plan;
  SelectorConfig selector;
  std::string rfe_k;
  auto* rq1 = app.add_subcommand("rq1", "Prioritization quality over repeated train/test splits");
  add_common(rq1, common);
  rq1->add_option("--matrix", paths.matrix, "Coverage matrix CSV")->required()->check(CLI::ExistingFile);
  rq1->add_option("--features", paths.features, "Feature CSV")->required()->check(CLI::ExistingFile);
  rq1->add_option("--space", paths.space, "Space manifest JSON (default: builtin grid)")->check(CLI::ExistingFile);
  rq1->add_option("--repeats", plan.n_repeats, "Number of splits")->capture_default_str();
  rq1->add_option("--test-fraction", plan.test_fraction, "Fraction of classes held out")->capture_default_str();
  rq1->add_option("--k-fraction", selector.k_fraction, "NCG cut-off as a fraction of the test set")->capture_default_str();
  rq1->add_option("--trees", trees, "Forest size")->capture_default_str();
  rq1->add_option("--depth", depth, "Maximum tree depth")->capture_default_str();
  rq1->add_option("--rfe-k", rfe_k, "Comma-separated feature counts for RFE variants");

  // hpimportance
  std::string class_list;
  auto* hpi = app.add_subcommand("hpimportance", "Per-class hyper-parameter importance and elimination schedule");
  add_common(hpi, common);
  hpi->add_option("--matrix", paths.matrix, "Coverage matrix CSV")->required()->check(CLI::ExistingFile);
  hpi->add_option("--space", paths.space, "Space manifest JSON (default: builtin grid)")->check(CLI::ExistingFile);
  hpi->add_option("--classes", class_list, "Comma-separated class ids (default: all)");
  hpi->add_option("--trees", trees, "Forest size")->capture_default_str();
  hpi->add_option("--depth", depth, "Maximum tree depth")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return 2;
  }

  forest.n_trees = trees;
  forest.max_depth = depth;
  forest.threads = common.threads;

  try {
    CLI::App* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    fs::path out = prepare_out(common);

    if (name == "extract") {
      auto keywords = keywords_file.empty() ? default_java_keywords() : parse_keyword_list(text::read_file(keywords_file));
      auto table = extract_directory(src_dir, keywords);
      if (!external_csv.empty()) table = merge_features(table, load_features_csv(external_csv));
      text::write_file((out / "features.csv").string(), features_to_csv(table));
    } else if (name == "gain") {
      auto m = load_matrix(paths.matrix, load_space(paths.space));
      text::write_file((out / "gains.csv").string(), gains_to_csv(compute_gains(m)));
    } else if (name == "prioritize") {
      auto features = load_features_csv(paths.features);
      auto gains = gain_map(gains_from_csv(text::read_file(train_gains)));
      std::vector<std::string> train, targets;
      for (const auto& r : features.rows) {
        if (gains.count(r.class_id)) train.push_back(r.class_id);
      }
      if (!targets_file.empty()) {
        for (const auto& l : text::lines(text::read_file(targets_file)))
          if (auto t = std::string(text::trim(l)); !t.empty()) targets.push_back(t);
      } else {
        for (const auto& r : features.rows)
          if (!gains.count(r.class_id)) targets.push_back(r.class_id);
      }
      if (train.size() < 2) throw Error("prioritize: need at least 2 training classes with gains");
      if (targets.empty()) throw Error("prioritize: no target classes to rank");
      if (target_k > 0) {
        auto path = rfe(make_dataset(features, train, gains), target_k, forest, derive_seed(common.seed, {"rfe"}));
        FeatureTable sub;
        sub.names = path.surviving;
        for (const auto& row : features.rows) {
          FeatureVector v;
          v.class_id = row.class_id;
          for (const auto& f : row.features)
            if (std::find(sub.names.begin(), sub.names.end(), f.first) != sub.names.end()) v.features.push_back(f);
          sub.rows.push_back(std::move(v));
        }
        features = std::move(sub);
      }
      auto train_set = make_dataset(features, train, gains);
      auto target_set = make_dataset(features, targets, {});
      std::vector<double> pred;
      if (model_kind == "rfr") {
        auto model = fit_forest(train_set, forest, derive_seed(common.seed, {"rfr"}));
        pred = model.predict(target_set);
        text::write_file((out / "model.json").string(), model.to_json().dump(1) + "\n");
      } else {
        pred = fit_linear(train_set).predict(target_set);
      }
      std::map<std::string, double> scores;
      for (std::size_t i = 0; i < targets.size(); ++i) scores[targets[i]] = pred[i];
      text::write_file((out / "ranking.csv").string(), ranking_to_csv(rank_classes(scores, model_kind), scores));
    } else if (name == "tune" || name == "sweep") {
      auto space = load_space(paths.space);
      auto m = load_matrix(paths.matrix, space.full_space());
      Evaluator ev(m, space);
      Ranking ranking = paths.ranking.empty() ? rank_classes(gain_map(compute_gains(m)), "matrix_gain")
                                              : load_ranking(paths.ranking);
      if (name == "tune") {
        auto s = StrategySpec::parse(strategy, cutoff);
        auto res = run_strategy(s, ev, &ranking, budget_hours, common.seed, RunOptions{common.threads});
        text::write_file((out / "tuning.csv").string(), tuning_result_to_csv(res));
      } else {
        BudgetSweep sw;
        sw.budgets = parse_budgets(budgets_spec);
        for (const auto& s : split_list(strategies_list)) {
          if (std::find(strategy_names.begin(), strategy_names.end(), s) == strategy_names.end())
            throw CLI::ValidationError("--strategies", "unknown strategy '" + s + "'");
          sw.strategies.push_back(StrategySpec::parse(s, cutoff));
        }
        sw.reps = reps;
        sw.seed = common.seed;
        sw.reference = reference;
        sw.threads = common.threads;
        auto res = budget_sweep(ev, &ranking, sw);
        emit_report(res.rows, (out / "report.csv").string());
        emit_svg(res.curves, (out / "curves.svg").string());
      }
    } else if (name == "synth") {
      spec.seed = common.seed;
      auto space = load_space(paths.space);
      auto data = generate(spec, space, common.threads);
      text::write_file((out / "matrix.csv").string(), data.matrix.to_csv());
      text::write_file((out / "features.csv").string(), features_to_csv(data.features));
      text::write_file((out / "gains.csv").string(), gains_to_csv(data.gains));
      text::write_file((out / "space.json").string(), space.to_json());
    } else if (name == "rq1") {
      auto m = load_matrix(paths.matrix, load_space(paths.space));
      auto features = load_features_csv(paths.features);
      plan.seed = common.seed;
      plan = make_splits(m.classes(), plan);
      selector.forest = forest;
      selector.seed = common.seed;
      selector.threads = common.threads;
      selector.rfe_feature_counts = parse_counts(rfe_k);
      text::write_file((out / "rq1.csv").string(), rq1_to_csv(rq1_pipeline(m, features, plan, selector)));
    } else if (name == "hpimportance") {
      auto m = load_matrix(paths.matrix, load_space(paths.space));
      std::vector<std::string> classes = class_list.empty() ? m.classes() : split_list(class_list);
      std::string csv = "class_id";
      for (const auto& p : m.space().params()) csv += ',' + p.name;
      csv += ",degenerate\n";
      std::vector<Importance> imps(classes.size());
      ForestParams fp = forest;
      fp.threads = 1;
      parallel_for(classes.size(), common.threads, [&](std::size_t i) {
        imps[i] = hp_importance(m, classes[i], fp, derive_seed(common.seed, {"hp", 0, std::string_view(classes[i])}));
      });
      for (std::size_t i = 0; i < classes.size(); ++i) {
        csv += classes[i];
        for (double v : imps[i].values) csv += ',' + text::num(v);
        csv += imps[i].degenerate ? ",1\n" : ",0\n";
      }
      text::write_file((out / "importance.csv").string(), csv);
      auto sched = hp_elimination_schedule(m, classes, forest, common.seed, common.threads);
      std::string s = "round,dropped,space_size,keep";
      for (const auto& p : m.space().params()) s += ",least_" + p.name;
      s += '\n';
      for (std::size_t r = 0; r < sched.rounds.size(); ++r) {
        const auto& er = sched.rounds[r];
        std::string keep;
        for (const auto& k : er.keep) keep += (keep.empty() ? "" : ";") + k;
        s += std::to_string(r + 1) + ',' + er.dropped + ',' + std::to_string(er.space_size) + ',' + keep;
        for (const auto& p : m.space().params()) {
          auto it = er.least_important_counts.find(p.name);
          s += ',' + (it == er.least_important_counts.end() ? std::string("") : std::to_string(it->second));
        }
        s += '\n';
      }
      text::write_file((out / "schedule.csv").string(), s);
    }
    write_config(out, name, cmd);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
