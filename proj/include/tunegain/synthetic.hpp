#pragma once

/// @file synthetic.hpp
/// @brief Desk-scale coverage matrices with known structure. Each class is
/// one of three archetypes: insensitive (same coverage everywhere), sparse
/// (a handful of configurations reach a boost) or tunable (coverage is a
/// smooth separable function of the genes). Feature vectors carry three
/// noisy informative columns plus pure-noise columns.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "tunegain/coverage_matrix.hpp"
#include "tunegain/error.hpp"
#include "tunegain/metrics.hpp"
#include "tunegain/parallel.hpp"
#include "tunegain/random.hpp"
#include "tunegain/regression.hpp"
#include "tunegain/tuning_gain.hpp"

namespace tunegain {

enum class Archetype { insensitive = 0, sparse = 1, tunable = 2 };

struct LandscapeSpec {
  std::size_t n_classes = 200;
  double insensitive_fraction = 0.4;
  double sparse_fraction = 0.2;
  double tunable_fraction = 0.4;
  long long base_min = 20;
  long long base_max = 200;
  double boost_min = 20.0;
  double boost_max = 80.0;
  std::size_t n_sparse_configs = 3;
  double seed_noise = 1.0;  // std-dev in branches
  std::size_t seeds_per_pair = 3;
  std::size_t n_noise_features = 27;
  std::uint64_t seed = 1;

  void validate(const HyperParameterSpace& space) const {
    if (n_classes < 1) throw Error("synthetic: n_classes must be positive");
    for (double f : {insensitive_fraction, sparse_fraction, tunable_fraction})
      if (!(f >= 0.0)) throw Error("synthetic: archetype fractions must be non-negative");
    if (std::abs(insensitive_fraction + sparse_fraction + tunable_fraction - 1.0) > 1e-9)
      throw Error("synthetic: archetype fractions must sum to 1");
    if (seeds_per_pair < 1) throw Error("synthetic: seeds_per_pair must be positive");
    if (base_min < 0 || base_max < base_min) throw Error("synthetic: invalid base range");
    if (!(boost_min >= 0.0) || boost_max < boost_min) throw Error("synthetic: invalid boost range");
    if (!(seed_noise >= 0.0)) throw Error("synthetic: noise must be non-negative");
    if (sparse_fraction > 0.0 && (n_sparse_configs < 1 || n_sparse_configs >= space.size()))
      throw Error("synthetic: n_sparse_configs must be in [1, space size)");
  }
};

struct SyntheticData {
  CoverageMatrix matrix;
  FeatureTable features;
  std::vector<GainRecord> gains;
  std::vector<Archetype> archetypes;
  std::vector<double> boosts;  // exact boost / amplitude per class (0 for insensitive)
};

inline const char* archetype_name(Archetype a) {
  switch (a) {
    case Archetype::insensitive: return "insensitive";
    case Archetype::sparse: return "sparse";
    default: return "tunable";
  }
}

namespace detail {

/// Largest-remainder rounding of fractions to counts summing to n.
inline std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& fractions) {
  std::vector<std::size_t> counts(fractions.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    double exact = fractions[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    used += counts[i];
    rem.emplace_back(-(exact - static_cast<double>(counts[i])), i);
  }
  std::sort(rem.begin(), rem.end());
  for (std::size_t k = 0; used < n; ++k, ++used) ++counts[rem[k % rem.size()].second];
  return counts;
}

inline long long noisy(double mean, double noise, Rng& rng) {
  double v = noise > 0.0 ? mean + noise * standard_normal(rng) : mean;
  return std::max(0LL, std::llround(v));
}

}  // namespace detail

inline SyntheticData generate(const LandscapeSpec& spec, const HyperParameterSpace& space, unsigned threads = 1) {
  spec.validate(space);
  const std::size_t n = spec.n_classes;
  auto counts = detail::apportion(n, {spec.insensitive_fraction, spec.sparse_fraction, spec.tunable_fraction});
  std::vector<Archetype> types;
  for (std::size_t a = 0; a < 3; ++a) types.insert(types.end(), counts[a], static_cast<Archetype>(a));
  Rng assign = derive_rng(spec.seed, {"archetypes"});
  for (std::size_t i = n; i > 1; --i) std::swap(types[i - 1], types[uniform_index(assign, i)]);

  const auto configs = space.enumerate();
  const ConfigId default_id = space.config_id(space.default_config());
  const std::size_t width = static_cast<std::size_t>(std::max<double>(3.0, std::ceil(std::log10(static_cast<double>(n)))));

  SyntheticData out;
  out.archetypes = types;
  out.boosts.assign(n, 0.0);
  std::vector<std::string> ids(n);
  std::vector<double> bases(n);
  std::vector<std::vector<CoverageRecord>> per_class(n);

  parallel_for(n, threads, [&](std::size_t c) {
    Rng rng = derive_rng(spec.seed, {"class", c});
    ids[c] = fmt::format("synth.C{:0{}}", c, width);
    double base = static_cast<double>(spec.base_min + static_cast<long long>(uniform_index(
                                                          rng, static_cast<std::size_t>(spec.base_max - spec.base_min + 1))));
    double boost = spec.boost_min + (spec.boost_max - spec.boost_min) * uniform01(rng);
    bases[c] = base;

    std::vector<double> mean(configs.size(), base);
    if (types[c] == Archetype::sparse) {
      out.boosts[c] = boost;
      std::size_t placed = 0;
      for (std::size_t id : sample_without_replacement(rng, configs.size(), spec.n_sparse_configs + 1)) {
        if (id == default_id || placed == spec.n_sparse_configs) continue;
        mean[id] += boost;
        ++placed;
      }
    } else if (types[c] == Archetype::tunable) {
      out.boosts[c] = boost;
      const std::size_t d = space.dimension();
      std::vector<double> weight(d), peak(d);
      double wsum = 0.0;
      for (std::size_t p = 0; p < d; ++p) {
        weight[p] = 0.2 + 0.8 * uniform01(rng);
        wsum += weight[p];
        peak[p] = static_cast<double>(uniform_index(rng, space.params()[p].values.size()));
      }
      for (std::size_t k = 0; k < configs.size(); ++k) {
        double f = 0.0;
        for (std::size_t p = 0; p < d; ++p) {
          double span = static_cast<double>(space.params()[p].values.size() - 1);
          double g = span > 0 ? 1.0 - std::abs(static_cast<double>(configs[k].genes[p]) - peak[p]) / span : 1.0;
          f += weight[p] / wsum * g;
        }
        mean[k] += std::round(boost * f);
      }
    }

    auto& recs = per_class[c];
    recs.reserve(configs.size() * spec.seeds_per_pair);
    for (std::size_t k = 0; k < configs.size(); ++k)
      for (std::size_t s = 0; s < spec.seeds_per_pair; ++s)
        recs.push_back({ids[c], static_cast<ConfigId>(k), static_cast<long long>(s),
                        detail::noisy(mean[k], spec.seed_noise, rng), std::nullopt});
  });

  std::vector<CoverageRecord> records;
  records.reserve(n * configs.size() * spec.seeds_per_pair);
  for (auto& r : per_class) {
    records.insert(records.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
    std::vector<CoverageRecord>().swap(r);
  }
  out.matrix = CoverageMatrix::from_records(space, records);
  records.clear();
  records.shrink_to_fit();
  out.gains = compute_gains(out.matrix);

  out.features.names = {"archetype_code", "boost_magnitude", "base_size"};
  for (std::size_t j = 0; j < spec.n_noise_features; ++j) out.features.names.push_back(fmt::format("noise_{:02}", j));
  Rng frng = derive_rng(spec.seed, {"features"});
  for (std::size_t c = 0; c < n; ++c) {
    FeatureVector v;
    v.class_id = ids[c];
    auto jitter = [&](double x) { return x * (1.0 + 0.05 * standard_normal(frng)); };
    v.features.emplace_back("archetype_code", jitter(static_cast<double>(types[c])));
    v.features.emplace_back("boost_magnitude", jitter(out.boosts[c]));
    v.features.emplace_back("base_size", jitter(bases[c]));
    for (std::size_t j = 0; j < spec.n_noise_features; ++j)
      v.features.emplace_back(out.features.names[3 + j], standard_normal(frng));
    out.features.rows.push_back(std::move(v));
  }
  return out;
}

/// Regression dataset over the rows of a feature table, targets from a gain map.
inline Dataset make_dataset(const FeatureTable& features, const std::vector<std::string>& class_ids,
                            const std::map<std::string, double>& targets) {
  std::map<std::string, const FeatureVector*> by_id;
  for (const auto& r : features.rows) by_id[r.class_id] = &r;
  std::vector<double> x, y;
  x.reserve(class_ids.size() * features.names.size());
  for (const auto& id : class_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error("no feature vector for class '" + id + "'");
    for (const auto& [name, v] : it->second->features) x.push_back(v);
    auto t = targets.find(id);
    y.push_back(t == targets.end() ? 0.0 : t->second);
  }
  return Dataset(features.names, std::move(x), std::move(y));
}

}  // namespace tunegain
