#pragma once

/// @file tuning_gain.hpp
/// @brief Per-class Tuning Gain (coverage variation times best-config
/// sparsity), rankings, and ranking quality scores (cumulative gain, NCG,
/// AUC ratio).

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "tunegain/coverage_matrix.hpp"
#include "tunegain/error.hpp"
#include "tunegain/text.hpp"

namespace tunegain {

struct GainRecord {
  std::string class_id;
  double variation = 0.0;  // population std-dev of covered branches
  double sparsity = 0.0;   // max minus median covered branches
  double gain = 0.0;       // variation * sparsity
};

/// Gain over a pooled sample of observations.
inline GainRecord gain_of(std::string class_id, std::span<const long long> obs) {
  if (obs.empty()) throw Error("no observations for '" + class_id + "'");
  const double n = static_cast<double>(obs.size());
  double mean = 0.0;
  for (long long v : obs) mean += static_cast<double>(v);
  mean /= n;
  double ss = 0.0;
  for (long long v : obs) {
    double d = static_cast<double>(v) - mean;
    ss += d * d;
  }
  std::vector<double> vals(obs.begin(), obs.end());
  double max = *std::max_element(vals.begin(), vals.end());
  double med = median(std::move(vals));
  GainRecord g;
  g.class_id = std::move(class_id);
  g.variation = std::sqrt(ss / n);
  g.sparsity = max - med;
  g.gain = g.variation * g.sparsity;
  return g;
}

/// Pools every (configuration, seed) observation of the class.
inline GainRecord compute_gain(const CoverageMatrix& m, const std::string& class_id) {
  return gain_of(class_id, m.all_observations(m.class_index(class_id)));
}

inline std::vector<GainRecord> compute_gains(const CoverageMatrix& m) {
  std::vector<GainRecord> out;
  out.reserve(m.classes().size());
  for (std::size_t c = 0; c < m.classes().size(); ++c) out.push_back(gain_of(m.classes()[c], m.all_observations(c)));
  return out;
}

inline std::map<std::string, double> gain_map(const std::vector<GainRecord>& gains) {
  std::map<std::string, double> out;
  for (const auto& g : gains) out[g.class_id] = g.gain;
  return out;
}

struct Ranking {
  std::vector<std::string> order;  // best first
  std::string method;
};

/// Descending score; ties broken by ascending class id.
inline Ranking rank_classes(const std::map<std::string, double>& scores, std::string method = "score") {
  if (scores.empty()) throw Error("rank_classes: empty score map");
  std::vector<std::pair<std::string, double>> items(scores.begin(), scores.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Ranking r;
  r.method = std::move(method);
  for (auto& [id, s] : items) r.order.push_back(id);
  return r;
}

inline std::vector<double> cumulative_gain_curve(const Ranking& ranking, const std::map<std::string, double>& true_gains) {
  if (ranking.order.size() != true_gains.size())
    throw Error("ranking covers " + std::to_string(ranking.order.size()) + " classes, gains cover " +
                std::to_string(true_gains.size()));
  std::vector<double> curve;
  curve.reserve(ranking.order.size());
  double sum = 0.0;
  std::map<std::string, bool> seen;
  for (const auto& id : ranking.order) {
    auto it = true_gains.find(id);
    if (it == true_gains.end()) throw Error("ranked class '" + id + "' has no true gain");
    if (seen[id]) throw Error("class '" + id + "' ranked twice");
    seen[id] = true;
    sum += it->second;
    curve.push_back(sum);
  }
  return curve;
}

namespace detail {
inline std::vector<double> optimal_curve(const std::map<std::string, double>& true_gains) {
  return cumulative_gain_curve(rank_classes(true_gains, "optimal"), true_gains);
}
inline void require_positive(const std::map<std::string, double>& true_gains) {
  bool any = std::any_of(true_gains.begin(), true_gains.end(), [](const auto& kv) { return kv.second > 0.0; });
  if (!any) throw UndefinedMetric("all true gains are zero; ratio is undefined");
}
}  // namespace detail

/// Normalized cumulative gain of the top-k classes.
inline double ncg(const Ranking& ranking, const std::map<std::string, double>& true_gains, std::size_t k) {
  if (k < 1 || k > ranking.order.size())
    throw Error("ncg: k=" + std::to_string(k) + " outside [1, " + std::to_string(ranking.order.size()) + "]");
  detail::require_positive(true_gains);
  auto curve = cumulative_gain_curve(ranking, true_gains);
  auto best = detail::optimal_curve(true_gains);
  if (best[k - 1] <= 0.0) throw UndefinedMetric("optimal cumulative gain at k is zero");
  return std::min(1.0, curve[k - 1] / best[k - 1]);
}

/// Unit-width discrete area under the cumulative-gain curve, relative to optimal.
inline double auc_ratio(const Ranking& ranking, const std::map<std::string, double>& true_gains) {
  detail::require_positive(true_gains);
  auto curve = cumulative_gain_curve(ranking, true_gains);
  auto best = detail::optimal_curve(true_gains);
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    a += curve[i];
    b += best[i];
  }
  return std::min(1.0, a / b);
}

/// CSV: class_id,variation,sparsity,gain,rank (rank is 1-based, by gain).
inline std::string gains_to_csv(const std::vector<GainRecord>& gains) {
  auto ranking = rank_classes(gain_map(gains));
  std::map<std::string, std::size_t> rank;
  for (std::size_t i = 0; i < ranking.order.size(); ++i) rank[ranking.order[i]] = i + 1;
  std::vector<const GainRecord*> rows;
  for (const auto& g : gains) rows.push_back(&g);
  std::sort(rows.begin(), rows.end(), [&](auto a, auto b) { return rank[a->class_id] < rank[b->class_id]; });
  std::string out = "class_id,variation,sparsity,gain,rank\n";
  for (const auto* g : rows)
    out += g->class_id + ',' + text::num(g->variation) + ',' + text::num(g->sparsity) + ',' + text::num(g->gain) + ',' +
           std::to_string(rank[g->class_id]) + '\n';
  return out;
}

inline std::vector<GainRecord> gains_from_csv(std::string_view content) {
  auto rows = text::lines(content);
  if (rows.empty() || rows[0] != "class_id,variation,sparsity,gain,rank") throw Error("gains: bad header");
  std::vector<GainRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].empty()) continue;
    auto c = text::split(rows[i]);
    GainRecord g;
    if (c.size() != 5 || !text::parse_double(c[1], g.variation) || !text::parse_double(c[2], g.sparsity) ||
        !text::parse_double(c[3], g.gain))
      throw Error("gains: line " + std::to_string(i + 1) + ": malformed row");
    g.class_id = c[0];
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace tunegain
