#pragma once

/// @file regression.hpp
/// @brief CART regression trees, a bagged random forest with impurity
/// importance, standardized least squares, and recursive feature elimination.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tunegain/error.hpp"
#include "tunegain/parallel.hpp"
#include "tunegain/random.hpp"

namespace tunegain {

/// Row-major design matrix with targets.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::vector<std::string> feature_names, std::vector<double> x, std::vector<double> y)
      : names_(std::move(feature_names)), x_(std::move(x)), y_(std::move(y)) {
    if (y_.empty()) throw Error("dataset is empty");
    if (names_.empty()) throw Error("dataset has no features");
    if (x_.size() != y_.size() * names_.size())
      throw Error("dataset shape mismatch: " + std::to_string(x_.size()) + " values for " +
                  std::to_string(y_.size()) + " rows x " + std::to_string(names_.size()) + " features");
    for (double v : x_)
      if (!std::isfinite(v)) throw Error("dataset contains a non-finite feature value");
    for (double v : y_)
      if (!std::isfinite(v)) throw Error("dataset contains a non-finite target");
  }

  std::size_t rows() const noexcept { return y_.size(); }
  std::size_t cols() const noexcept { return names_.size(); }
  double x(std::size_t r, std::size_t c) const { return x_[r * names_.size() + c]; }
  std::span<const double> row(std::size_t r) const { return {x_.data() + r * names_.size(), names_.size()}; }
  double y(std::size_t r) const { return y_[r]; }
  const std::vector<double>& targets() const noexcept { return y_; }
  const std::vector<std::string>& feature_names() const noexcept { return names_; }

  Dataset select_rows(std::span<const std::size_t> idx) const {
    std::vector<double> x, y;
    x.reserve(idx.size() * cols());
    for (std::size_t r : idx) {
      auto rr = row(r);
      x.insert(x.end(), rr.begin(), rr.end());
      y.push_back(y_[r]);
    }
    return Dataset(names_, std::move(x), std::move(y));
  }

  Dataset select_columns(std::span<const std::size_t> cols_idx) const {
    std::vector<std::string> names;
    for (std::size_t c : cols_idx) names.push_back(names_.at(c));
    std::vector<double> x;
    x.reserve(rows() * cols_idx.size());
    for (std::size_t r = 0; r < rows(); ++r)
      for (std::size_t c : cols_idx) x.push_back(this->x(r, c));
    return Dataset(std::move(names), std::move(x), y_);
  }

  Dataset with_targets(std::vector<double> y) const { return Dataset(names_, x_, std::move(y)); }

 private:
  std::vector<std::string> names_;
  std::vector<double> x_;
  std::vector<double> y_;
};

struct ForestParams {
  std::size_t n_trees = 200;
  std::size_t max_depth = 5;
  std::size_t max_features = 0;  // 0 means ceil(d / 3)
  std::size_t min_leaf = 1;
  unsigned threads = 1;          // scheduling only; results do not depend on it

  std::size_t features_per_split(std::size_t d) const {
    std::size_t m = max_features ? max_features : (d + 2) / 3;
    return std::clamp<std::size_t>(m, 1, d);
  }
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // mean training target of the node
  std::size_t samples = 0;
};

class RegressionTree {
 public:
  std::vector<TreeNode> nodes;

  /// Goes left when x[feature] <= threshold.
  double predict(std::span<const double> x) const {
    std::size_t k = 0;
    while (nodes[k].feature >= 0)
      k = static_cast<std::size_t>(x[static_cast<std::size_t>(nodes[k].feature)] <= nodes[k].threshold ? nodes[k].left
                                                                                                         : nodes[k].right);
    return nodes[k].value;
  }

  std::size_t depth() const { return nodes.empty() ? 0 : depth_from(0); }

 private:
  std::size_t depth_from(std::size_t k) const {
    if (nodes[k].feature < 0) return 0;
    return 1 + std::max(depth_from(static_cast<std::size_t>(nodes[k].left)),
                        depth_from(static_cast<std::size_t>(nodes[k].right)));
  }
};

namespace detail {

/// Grows one CART tree on a list of (possibly repeated) sample indices.
class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const ForestParams& params, Rng& rng, std::vector<double>& importance)
      : data_(data), params_(params), rng_(rng), importance_(importance) {}

  RegressionTree build(std::vector<std::size_t> samples) {
    RegressionTree tree;
    grow(tree, samples, 0);
    return tree;
  }

 private:
  int grow(RegressionTree& tree, std::vector<std::size_t>& idx, std::size_t depth) {
    const std::size_t n = idx.size();
    double sum = 0.0;
    for (std::size_t i : idx) sum += data_.y(i);
    const double mean = sum / static_cast<double>(n);
    double sse = 0.0;
    for (std::size_t i : idx) {
      double d = data_.y(i) - mean;
      sse += d * d;
    }
    int self = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({-1, 0.0, -1, -1, mean, n});

    if (depth >= params_.max_depth || n < 2 * params_.min_leaf ||
        sse <= 1e-14 * static_cast<double>(n) * std::max(1.0, mean * mean))
      return self;

    const std::size_t d = data_.cols();
    auto features = sample_without_replacement(rng_, d, params_.features_per_split(d));
    std::sort(features.begin(), features.end());

    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    pairs_.resize(n);
    for (std::size_t f : features) {
      for (std::size_t k = 0; k < n; ++k) pairs_[k] = {data_.x(idx[k], f), data_.y(idx[k])};
      std::sort(pairs_.begin(), pairs_.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      double left = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        left += pairs_[k].second;
        if (pairs_[k].first == pairs_[k + 1].first) continue;
        std::size_t nl = k + 1, nr = n - nl;
        if (nl < params_.min_leaf || nr < params_.min_leaf) continue;
        double ml = left / static_cast<double>(nl);
        double mr = (sum - left) / static_cast<double>(nr);
        double gain = static_cast<double>(nl) * static_cast<double>(nr) / static_cast<double>(n) * (ml - mr) * (ml - mr);
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (pairs_[k].first + pairs_[k + 1].first);
        }
      }
    }
    if (best_feature < 0 || best_gain <= 1e-12 * sse) return self;

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx)
      (data_.x(i, static_cast<std::size_t>(best_feature)) <= best_threshold ? left_idx : right_idx).push_back(i);
    if (left_idx.empty() || right_idx.empty()) return self;
    importance_[static_cast<std::size_t>(best_feature)] += best_gain;

    std::vector<std::size_t>().swap(idx);
    int l = grow(tree, left_idx, depth + 1);
    int r = grow(tree, right_idx, depth + 1);
    tree.nodes[static_cast<std::size_t>(self)].feature = best_feature;
    tree.nodes[static_cast<std::size_t>(self)].threshold = best_threshold;
    tree.nodes[static_cast<std::size_t>(self)].left = l;
    tree.nodes[static_cast<std::size_t>(self)].right = r;
    return self;
  }

  const Dataset& data_;
  const ForestParams& params_;
  Rng& rng_;
  std::vector<double>& importance_;
  std::vector<std::pair<double, double>> pairs_;
};

}  // namespace detail

struct Importance {
  std::vector<double> values;
  bool degenerate = false;  // no split anywhere; values are all zero
};

class ForestModel {
 public:
  ForestParams params;
  std::uint64_t seed = 0;
  std::vector<std::string> feature_names;
  std::vector<RegressionTree> trees;
  std::vector<double> impurity_decrease;  // raw per-feature SSE reduction totals

  std::size_t dimension() const noexcept { return feature_names.size(); }

  double predict(std::span<const double> x) const {
    if (trees.empty()) throw Error("forest is not fitted");
    if (x.size() != dimension())
      throw Error("predict: expected " + std::to_string(dimension()) + " features, got " + std::to_string(x.size()));
    double s = 0.0;
    for (const auto& t : trees) s += t.predict(x);
    return s / static_cast<double>(trees.size());
  }

  std::vector<double> predict(const Dataset& data) const {
    std::vector<double> out(data.rows());
    for (std::size_t r = 0; r < data.rows(); ++r) out[r] = predict(data.row(r));
    return out;
  }

  /// Impurity decrease per feature normalized to sum 1.
  Importance feature_importance() const {
    if (trees.empty()) throw Error("forest is not fitted");
    Importance imp;
    imp.values.assign(dimension(), 0.0);
    double total = std::accumulate(impurity_decrease.begin(), impurity_decrease.end(), 0.0);
    if (total <= 0.0) {
      imp.degenerate = true;
      return imp;
    }
    for (std::size_t i = 0; i < dimension(); ++i) imp.values[i] = impurity_decrease[i] / total;
    return imp;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["kind"] = "random_forest";
    j["params"] = {{"n_trees", params.n_trees},
                   {"max_depth", params.max_depth},
                   {"max_features", params.features_per_split(dimension())},
                   {"min_leaf", params.min_leaf}};
    j["seed"] = seed;
    j["feature_names"] = feature_names;
    j["impurity_decrease"] = impurity_decrease;
    j["trees"] = nlohmann::ordered_json::array();
    for (const auto& t : trees) {
      nlohmann::ordered_json jt;
      std::vector<int> feat, left, right;
      std::vector<double> thr, val;
      std::vector<std::size_t> samples;
      for (const auto& n : t.nodes) {
        feat.push_back(n.feature);
        thr.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        val.push_back(n.value);
        samples.push_back(n.samples);
      }
      jt["feature"] = feat;
      jt["threshold"] = thr;
      jt["left"] = left;
      jt["right"] = right;
      jt["value"] = val;
      jt["samples"] = samples;
      j["trees"].push_back(std::move(jt));
    }
    return j;
  }

  static ForestModel from_json(const nlohmann::json& j) {
    try {
      if (j.at("kind") != "random_forest") throw Error("model: not a random_forest");
      ForestModel m;
      m.params.n_trees = j.at("params").at("n_trees");
      m.params.max_depth = j.at("params").at("max_depth");
      m.params.max_features = j.at("params").at("max_features");
      m.params.min_leaf = j.at("params").at("min_leaf");
      m.seed = j.at("seed");
      m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
      m.impurity_decrease = j.at("impurity_decrease").get<std::vector<double>>();
      for (const auto& jt : j.at("trees")) {
        RegressionTree t;
        auto feat = jt.at("feature").get<std::vector<int>>();
        auto thr = jt.at("threshold").get<std::vector<double>>();
        auto left = jt.at("left").get<std::vector<int>>();
        auto right = jt.at("right").get<std::vector<int>>();
        auto val = jt.at("value").get<std::vector<double>>();
        auto samples = jt.at("samples").get<std::vector<std::size_t>>();
        for (std::size_t k = 0; k < feat.size(); ++k) t.nodes.push_back({feat[k], thr[k], left[k], right[k], val[k], samples[k]});
        m.trees.push_back(std::move(t));
      }
      return m;
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("model: ") + e.what());
    }
  }
};

/// Fits a bagged forest. Tree t draws its bootstrap sample and split
/// candidates from an rng derived from (seed, t), so the model is the same
/// for any thread count.
inline ForestModel fit_forest(const Dataset& data, const ForestParams& params, std::uint64_t seed) {
  if (data.rows() == 0) throw Error("fit_forest: empty dataset");
  if (params.n_trees == 0) throw Error("fit_forest: n_trees must be positive");
  if (params.min_leaf == 0) throw Error("fit_forest: min_leaf must be positive");
  ForestModel m;
  m.params = params;
  m.seed = seed;
  m.feature_names = data.feature_names();
  m.trees.resize(params.n_trees);
  std::vector<std::vector<double>> per_tree(params.n_trees, std::vector<double>(data.cols(), 0.0));
  const std::size_t n = data.rows();
  parallel_for(params.n_trees, params.threads, [&](std::size_t t) {
    Rng rng = derive_rng(seed, {"tree", t});
    std::vector<std::size_t> boot(n);
    for (auto& b : boot) b = uniform_index(rng, n);
    detail::TreeBuilder builder(data, params, rng, per_tree[t]);
    m.trees[t] = builder.build(std::move(boot));
  });
  m.impurity_decrease.assign(data.cols(), 0.0);
  for (const auto& v : per_tree)
    for (std::size_t i = 0; i < v.size(); ++i) m.impurity_decrease[i] += v[i];
  return m;
}

/// Affine model over standardized features.
struct LinearModel {
  std::vector<double> coefficients;  // per standardized feature
  double intercept = 0.0;
  std::vector<double> means;
  std::vector<double> scales;  // population std-dev; 0 marks an ignored feature

  double predict(std::span<const double> x) const {
    if (x.size() != coefficients.size())
      throw Error("predict: expected " + std::to_string(coefficients.size()) + " features, got " +
                  std::to_string(x.size()));
    double s = intercept;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (scales[i] > 0.0) s += coefficients[i] * (x[i] - means[i]) / scales[i];
    return s;
  }

  std::vector<double> predict(const Dataset& data) const {
    std::vector<double> out(data.rows());
    for (std::size_t r = 0; r < data.rows(); ++r) out[r] = predict(data.row(r));
    return out;
  }
};

/// Ordinary least squares on standardized features with a 1e-8 ridge term.
inline LinearModel fit_linear(const Dataset& data) {
  const std::size_t n = data.rows(), d = data.cols();
  if (n < 2) throw Error("fit_linear: need at least 2 rows");
  LinearModel m;
  m.coefficients.assign(d, 0.0);
  m.means.assign(d, 0.0);
  m.scales.assign(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += data.x(r, c);
    m.means[c] = s / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      double dv = data.x(r, c) - m.means[c];
      ss += dv * dv;
    }
    double sd = std::sqrt(ss / static_cast<double>(n));
    m.scales[c] = sd > 1e-12 * std::max(1.0, std::abs(m.means[c])) ? sd : 0.0;
  }
  double ybar = 0.0;
  for (std::size_t r = 0; r < n; ++r) ybar += data.y(r);
  ybar /= static_cast<double>(n);
  m.intercept = ybar;

  std::vector<std::size_t> active;
  for (std::size_t c = 0; c < d; ++c)
    if (m.scales[c] > 0.0) active.push_back(c);
  if (active.empty()) return m;

  Eigen::MatrixXd z(n, active.size());
  Eigen::VectorXd yc(n);
  for (std::size_t r = 0; r < n; ++r) {
    yc(static_cast<Eigen::Index>(r)) = data.y(r) - ybar;
    for (std::size_t k = 0; k < active.size(); ++k) {
      std::size_t c = active[k];
      z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = (data.x(r, c) - m.means[c]) / m.scales[c];
    }
  }
  Eigen::MatrixXd gram = z.transpose() * z;
  gram.diagonal().array() += 1e-8;
  Eigen::VectorXd beta = gram.ldlt().solve(z.transpose() * yc);
  for (std::size_t k = 0; k < active.size(); ++k) {
    double b = beta(static_cast<Eigen::Index>(k));
    m.coefficients[active[k]] = std::isfinite(b) ? b : 0.0;
  }
  return m;
}

/// Coefficient of determination of predictions against targets.
inline double r_squared(std::span<const double> truth, std::span<const double> pred) {
  double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  return ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
}

struct RfeResult {
  std::vector<std::string> surviving;           // in dataset column order
  std::vector<std::vector<std::string>> trace;  // names dropped in each round

  /// Features left once the dataset had been cut down to k (k >= final size).
  std::vector<std::string> surviving_at(const std::vector<std::string>& all_names, std::size_t k) const {
    std::vector<std::string> dropped;
    for (const auto& round : trace) {
      if (all_names.size() - dropped.size() <= k) break;
      dropped.insert(dropped.end(), round.begin(), round.end());
    }
    std::vector<std::string> out;
    for (const auto& n : all_names)
      if (std::find(dropped.begin(), dropped.end(), n) == dropped.end()) out.push_back(n);
    return out;
  }
};

/// Recursive feature elimination: refit, drop the `step` least important
/// features (ties drop the lexicographically last name), repeat until
/// target_k remain.
inline RfeResult rfe(const Dataset& data, std::size_t target_k, const ForestParams& params, std::uint64_t seed,
                     std::size_t step = 1) {
  if (target_k < 1 || target_k > data.cols())
    throw Error("rfe: target_k=" + std::to_string(target_k) + " outside [1, " + std::to_string(data.cols()) + "]");
  if (step < 1) throw Error("rfe: step must be positive");
  std::vector<std::size_t> cols(data.cols());
  std::iota(cols.begin(), cols.end(), 0);
  RfeResult result;
  for (std::size_t round = 0; cols.size() > target_k; ++round) {
    Dataset sub = data.select_columns(cols);
    auto imp = fit_forest(sub, params, derive_seed(seed, {"rfe", round})).feature_importance();
    std::vector<std::size_t> order(cols.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (imp.values[a] != imp.values[b]) return imp.values[a] < imp.values[b];
      return sub.feature_names()[a] > sub.feature_names()[b];
    });
    std::size_t drop = std::min(step, cols.size() - target_k);
    std::vector<std::size_t> dropped(order.begin(), order.begin() + static_cast<long>(drop));
    std::vector<std::string> names;
    for (std::size_t k : dropped) names.push_back(sub.feature_names()[k]);
    result.trace.push_back(std::move(names));
    std::sort(dropped.begin(), dropped.end());
    std::vector<std::size_t> kept;
    for (std::size_t k = 0; k < cols.size(); ++k)
      if (!std::binary_search(dropped.begin(), dropped.end(), k)) kept.push_back(cols[k]);
    cols = std::move(kept);
  }
  for (std::size_t c : cols) result.surviving.push_back(data.feature_names()[c]);
  return result;
}

}  // namespace tunegain
