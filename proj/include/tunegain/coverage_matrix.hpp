#pragma once

/// @file coverage_matrix.hpp
/// @brief Exhaustive (class, configuration, seed) -> covered-branches store.
/// Serves as the replay evaluator: tuning strategies sample single runs from
/// it and final results are scored against per-pair medians.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tunegain/error.hpp"
#include "tunegain/random.hpp"
#include "tunegain/search_space.hpp"
#include "tunegain/text.hpp"

namespace tunegain {

struct CoverageRecord {
  std::string class_id;
  ConfigId config_id = 0;
  long long seed = 0;
  long long covered_branches = 0;
  std::optional<long long> total_branches;
};

/// Median of a sample; even counts average the two central values.
inline double median(std::vector<double> v) {
  if (v.empty()) throw Error("median of empty sample");
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline bool valid_class_id(std::string_view id) {
  if (id.empty()) return false;
  for (char c : id) {
    bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' ||
              c == '.' || c == '$' || c == '-';
    if (!ok) return false;
  }
  return true;
}

class CoverageMatrix {
 public:
  static constexpr std::string_view kHeader = "class_id,config_id,seed,covered_branches";
  static constexpr std::string_view kHeaderWithTotal = "class_id,config_id,seed,covered_branches,total_branches";

  CoverageMatrix() = default;

  /// Builds and validates a matrix. Classes keep first-appearance order;
  /// seeds within a pair are stored in ascending seed order.
  static CoverageMatrix from_records(HyperParameterSpace space, const std::vector<CoverageRecord>& records) {
    if (space.is_reduced()) throw Error("coverage matrix requires an unreduced space");
    CoverageMatrix m;
    m.space_ = std::move(space);
    const std::uint64_t size = m.space_.size();

    // class -> config -> list of (seed, value)
    std::vector<std::map<ConfigId, std::vector<std::pair<long long, long long>>>> staged;
    for (const auto& r : records) {
      if (!valid_class_id(r.class_id)) throw Error("invalid class id '" + r.class_id + "'");
      if (r.config_id >= size)
        throw Error("config_id " + std::to_string(r.config_id) + " out of range for space of size " +
                    std::to_string(size));
      if (r.covered_branches < 0) throw Error("negative covered_branches for " + r.class_id);
      auto [it, inserted] = m.index_.try_emplace(r.class_id, m.classes_.size());
      if (inserted) {
        m.classes_.push_back(r.class_id);
        m.data_.emplace_back();
        staged.emplace_back();
      }
      auto& cls = m.data_[it->second];
      if (r.total_branches) {
        if (cls.total && *cls.total != *r.total_branches)
          throw Error("inconsistent total_branches for " + r.class_id);
        cls.total = r.total_branches;
      }
      staged[it->second][r.config_id].emplace_back(r.seed, r.covered_branches);
    }

    std::optional<std::size_t> per_pair;
    for (std::size_t c = 0; c < m.classes_.size(); ++c) {
      auto& cls = m.data_[c];
      cls.offset.assign(static_cast<std::size_t>(size), -1);
      for (auto& [config, obs] : staged[c]) {
        std::sort(obs.begin(), obs.end());
        for (std::size_t i = 1; i < obs.size(); ++i)
          if (obs[i].first == obs[i - 1].first)
            throw Error("duplicate record (" + m.classes_[c] + ", " + std::to_string(config) + ", " +
                        std::to_string(obs[i].first) + ")");
        if (!per_pair) per_pair = obs.size();
        if (*per_pair != obs.size())
          throw Error("inconsistent seed counts: (" + m.classes_[c] + ", " + std::to_string(config) + ") has " +
                      std::to_string(obs.size()) + " seeds, expected " + std::to_string(*per_pair));
        cls.offset[static_cast<std::size_t>(config)] = static_cast<long>(cls.configs.size());
        cls.configs.push_back(config);
        std::vector<double> vals;
        for (const auto& [seed, v] : obs) {
          cls.seeds.push_back(seed);
          cls.values.push_back(v);
          vals.push_back(static_cast<double>(v));
        }
        cls.medians.push_back(median(std::move(vals)));
      }
    }
    m.seeds_per_pair_ = per_pair.value_or(0);
    return m;
  }

  static CoverageMatrix parse(std::string_view content, HyperParameterSpace space) {
    auto rows = text::lines(content);
    if (rows.empty()) throw Error("matrix: empty file");
    bool with_total;
    if (rows[0] == kHeader) {
      with_total = false;
    } else if (rows[0] == kHeaderWithTotal) {
      with_total = true;
    } else {
      throw Error("matrix: bad header '" + rows[0] + "'");
    }
    std::vector<CoverageRecord> records;
    records.reserve(rows.size());
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].empty()) continue;
      auto cells = text::split(rows[i]);
      std::size_t want = with_total ? 5 : 4;
      if (cells.size() != want)
        throw Error("matrix: line " + std::to_string(i + 1) + ": expected " + std::to_string(want) + " fields");
      CoverageRecord r;
      r.class_id = cells[0];
      long long cfg, seed, cov;
      if (!text::parse_int(cells[1], cfg) || cfg < 0 || !text::parse_int(cells[2], seed) ||
          !text::parse_int(cells[3], cov))
        throw Error("matrix: line " + std::to_string(i + 1) + ": malformed row");
      r.config_id = static_cast<ConfigId>(cfg);
      r.seed = seed;
      r.covered_branches = cov;
      if (with_total) {
        long long tot;
        if (!text::parse_int(cells[4], tot)) throw Error("matrix: line " + std::to_string(i + 1) + ": malformed row");
        r.total_branches = tot;
      }
      records.push_back(std::move(r));
    }
    try {
      return from_records(std::move(space), records);
    } catch (const Error& e) {
      throw Error(std::string("matrix: ") + e.what());
    }
  }

  std::string to_csv() const {
    bool with_total = !data_.empty() && std::all_of(data_.begin(), data_.end(), [](const ClassData& d) {
      return d.total.has_value();
    });
    std::string out(with_total ? kHeaderWithTotal : kHeader);
    out += '\n';
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      const auto& cls = data_[c];
      std::vector<std::size_t> order(cls.configs.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return cls.configs[a] < cls.configs[b]; });
      for (std::size_t p : order) {
        for (std::size_t s = 0; s < seeds_per_pair_; ++s) {
          std::size_t k = p * seeds_per_pair_ + s;
          out += classes_[c];
          out += ',';
          out += std::to_string(cls.configs[p]);
          out += ',';
          out += std::to_string(cls.seeds[k]);
          out += ',';
          out += std::to_string(cls.values[k]);
          if (with_total) {
            out += ',';
            out += std::to_string(*cls.total);
          }
          out += '\n';
        }
      }
    }
    return out;
  }

  const HyperParameterSpace& space() const noexcept { return space_; }
  const std::vector<std::string>& classes() const noexcept { return classes_; }
  std::size_t seeds_per_pair() const noexcept { return seeds_per_pair_; }

  std::size_t record_count() const noexcept {
    std::size_t n = 0;
    for (const auto& d : data_) n += d.values.size();
    return n;
  }

  bool has_class(const std::string& class_id) const { return index_.count(class_id) > 0; }

  std::size_t class_index(const std::string& class_id) const {
    auto it = index_.find(class_id);
    if (it == index_.end()) throw Error("unknown class '" + class_id + "'");
    return it->second;
  }

  bool has_pair(std::size_t cls, ConfigId config) const {
    return config < space_.size() && data_.at(cls).offset[static_cast<std::size_t>(config)] >= 0;
  }

  /// Covered-branch observations of one pair, ascending by seed.
  std::span<const long long> observations(std::size_t cls, ConfigId config) const {
    std::size_t p = pair_index(cls, config);
    return {data_[cls].values.data() + p * seeds_per_pair_, seeds_per_pair_};
  }

  /// Every observation of a class across all configurations and seeds.
  std::span<const long long> all_observations(std::size_t cls) const { return data_.at(cls).values; }

  std::optional<long long> total_branches(std::size_t cls) const { return data_.at(cls).total; }

  /// Configurations present for a class, in insertion (ascending) order.
  const std::vector<ConfigId>& configs(std::size_t cls) const { return data_.at(cls).configs; }

  /// Median covered branches of a pair over its seeds.
  double ground_truth(std::size_t cls, ConfigId config) const {
    return data_[cls].medians[pair_index(cls, config)];
  }
  double ground_truth(const std::string& class_id, const Configuration& config) const {
    return ground_truth(class_index(class_id), space_.config_id(config));
  }

  /// One simulated run: a seed drawn uniformly with replacement.
  long long sample(std::size_t cls, ConfigId config, Rng& rng) const {
    auto obs = observations(cls, config);
    return obs[uniform_index(rng, obs.size())];
  }
  long long sample(const std::string& class_id, const Configuration& config, Rng& rng) const {
    return sample(class_index(class_id), space_.config_id(config), rng);
  }

  /// Largest ground-truth improvement over the default configuration, floored at 0.
  double best_extra(std::size_t cls) const {
    const auto& d = data_.at(cls);
    double base = ground_truth(cls, space_.config_id(space_.default_config()));
    double best = 0.0;
    for (double m : d.medians) best = std::max(best, m - base);
    return best;
  }
  double best_extra(const std::string& class_id) const { return best_extra(class_index(class_id)); }

  friend bool operator==(const CoverageMatrix& a, const CoverageMatrix& b) {
    if (!(a.space_ == b.space_) || a.classes_ != b.classes_ || a.seeds_per_pair_ != b.seeds_per_pair_) return false;
    for (std::size_t c = 0; c < a.data_.size(); ++c) {
      const auto& x = a.data_[c];
      const auto& y = b.data_[c];
      if (x.offset != y.offset || x.seeds != y.seeds || x.values != y.values || x.total != y.total) return false;
    }
    return true;
  }

 private:
  struct ClassData {
    std::vector<long> offset;  // per config id: pair index or -1
    std::vector<ConfigId> configs;
    std::vector<long long> seeds;
    std::vector<long long> values;
    std::vector<double> medians;
    std::optional<long long> total;
  };

  std::size_t pair_index(std::size_t cls, ConfigId config) const {
    if (cls >= data_.size()) throw Error("class index out of range");
    if (config >= space_.size() || data_[cls].offset[static_cast<std::size_t>(config)] < 0)
      throw Error("no observations for (" + classes_[cls] + ", " + std::to_string(config) + ")");
    return static_cast<std::size_t>(data_[cls].offset[static_cast<std::size_t>(config)]);
  }

  HyperParameterSpace space_;
  std::vector<std::string> classes_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<ClassData> data_;
  std::size_t seeds_per_pair_ = 0;
};

inline CoverageMatrix load_matrix(const std::string& path, HyperParameterSpace space) {
  return CoverageMatrix::parse(text::read_file(path), std::move(space));
}

}  // namespace tunegain
