#pragma once

/// @file search_space.hpp
/// @brief Discrete hyper-parameter grids: enumeration, stable ids, and
/// reduction to sub-spaces with dropped parameters pinned at their defaults.

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "tunegain/error.hpp"

namespace tunegain {

struct HyperParameter {
  std::string name;
  std::vector<std::string> values;
  std::size_t default_index = 0;
};

/// One grid point: a value index per parameter, in space order.
struct Configuration {
  std::vector<std::size_t> genes;

  friend bool operator==(const Configuration&, const Configuration&) = default;
  friend auto operator<=>(const Configuration&, const Configuration&) = default;
};

using ConfigId = std::uint64_t;

/// An ordered product of finite parameter domains.
///
/// A space produced by reduce() remembers the space it came from: its
/// configurations expand() back to full-space configurations with every
/// dropped parameter at its default value. Ids are lexicographic with the
/// first parameter most significant.
class HyperParameterSpace {
 public:
  HyperParameterSpace() = default;

  explicit HyperParameterSpace(std::vector<HyperParameter> params) : params_(std::move(params)) {
    validate(params_);
    full_ = params_;
    slot_.resize(params_.size());
    for (std::size_t i = 0; i < slot_.size(); ++i) slot_[i] = static_cast<long>(i);
    compute_strides();
  }

  const std::vector<HyperParameter>& params() const noexcept { return params_; }
  std::size_t dimension() const noexcept { return params_.size(); }
  std::uint64_t size() const noexcept { return size_; }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (params_[i].name == name) return i;
    throw Error("unknown hyper-parameter '" + name + "'");
  }

  bool contains(const Configuration& c) const noexcept {
    if (c.genes.size() != params_.size()) return false;
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (c.genes[i] >= params_[i].values.size()) return false;
    return true;
  }

  Configuration default_config() const {
    Configuration c;
    c.genes.reserve(params_.size());
    for (const auto& p : params_) c.genes.push_back(p.default_index);
    return c;
  }

  ConfigId config_id(const Configuration& c) const {
    check(c);
    ConfigId id = 0;
    for (std::size_t i = 0; i < params_.size(); ++i) id += c.genes[i] * strides_[i];
    return id;
  }

  Configuration decode(ConfigId id) const {
    if (id >= size_)
      throw Error("configuration id " + std::to_string(id) + " out of range [0, " +
                  std::to_string(size_) + ")");
    Configuration c;
    c.genes.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      c.genes[i] = static_cast<std::size_t>(id / strides_[i]);
      id %= strides_[i];
    }
    return c;
  }

  std::vector<Configuration> enumerate() const {
    std::vector<Configuration> out;
    out.reserve(static_cast<std::size_t>(size_));
    for (ConfigId id = 0; id < size_; ++id) out.push_back(decode(id));
    return out;
  }

  /// Keeps only the named parameters (in original order); the others are
  /// pinned at their defaults.
  HyperParameterSpace reduce(const std::set<std::string>& keep) const {
    if (keep.empty()) throw Error("reduce: keep set must not be empty");
    for (const auto& name : keep) index_of(name);
    HyperParameterSpace out;
    out.full_ = full_;
    out.slot_.assign(full_.size(), -1);
    for (std::size_t f = 0; f < full_.size(); ++f) {
      if (slot_[f] < 0 || !keep.count(full_[f].name)) continue;
      out.slot_[f] = static_cast<long>(out.params_.size());
      out.params_.push_back(full_[f]);
    }
    out.compute_strides();
    return out;
  }

  bool is_reduced() const noexcept { return params_.size() != full_.size(); }

  /// The unreduced space this one was derived from (itself if not reduced).
  HyperParameterSpace full_space() const { return HyperParameterSpace(full_); }

  /// Names of parameters pinned at their defaults.
  std::vector<std::string> pinned_names() const {
    std::vector<std::string> out;
    for (std::size_t f = 0; f < full_.size(); ++f)
      if (slot_[f] < 0) out.push_back(full_[f].name);
    return out;
  }

  Configuration expand(const Configuration& c) const {
    check(c);
    Configuration full;
    full.genes.resize(full_.size());
    for (std::size_t f = 0; f < full_.size(); ++f)
      full.genes[f] = slot_[f] < 0 ? full_[f].default_index : c.genes[static_cast<std::size_t>(slot_[f])];
    return full;
  }

  /// Id of the expanded configuration in the full space.
  ConfigId full_id(const Configuration& c) const {
    Configuration full = expand(c);
    ConfigId id = 0;
    ConfigId stride = 1;
    for (std::size_t f = full_.size(); f-- > 0;) {
      id += full.genes[f] * stride;
      stride *= full_[f].values.size();
    }
    return id;
  }

  std::uint64_t full_size() const noexcept {
    std::uint64_t s = 1;
    for (const auto& p : full_) s *= p.values.size();
    return s;
  }

  std::string label(const Configuration& c) const {
    check(c);
    std::string out;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (i) out += ' ';
      out += params_[i].name + '=' + params_[i].values[c.genes[i]];
    }
    return out;
  }

  /// Manifest: {"params":[{"name","values","default"}...]} plus "keep" when reduced.
  std::string to_json() const {
    nlohmann::ordered_json j;
    j["params"] = nlohmann::ordered_json::array();
    for (const auto& p : full_) {
      nlohmann::ordered_json e;
      e["name"] = p.name;
      e["values"] = p.values;
      e["default"] = p.default_index;
      j["params"].push_back(std::move(e));
    }
    if (is_reduced()) {
      j["keep"] = nlohmann::ordered_json::array();
      for (const auto& p : params_) j["keep"].push_back(p.name);
    }
    return j.dump(2) + "\n";
  }

  static HyperParameterSpace from_json(const std::string& text) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("space manifest: ") + e.what());
    }
    if (!j.is_object() || !j.contains("params") || !j["params"].is_array())
      throw Error("space manifest: missing \"params\" array");
    std::vector<HyperParameter> params;
    try {
      for (const auto& e : j["params"]) {
        HyperParameter p;
        p.name = e.at("name").get<std::string>();
        p.values = e.at("values").get<std::vector<std::string>>();
        p.default_index = e.at("default").get<std::size_t>();
        params.push_back(std::move(p));
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("space manifest: ") + e.what());
    }
    HyperParameterSpace space(std::move(params));
    if (j.contains("keep")) {
      std::set<std::string> keep;
      for (const auto& k : j["keep"]) keep.insert(k.get<std::string>());
      return space.reduce(keep);
    }
    return space;
  }

  friend bool operator==(const HyperParameterSpace& a, const HyperParameterSpace& b) {
    auto same = [](const std::vector<HyperParameter>& x, const std::vector<HyperParameter>& y) {
      if (x.size() != y.size()) return false;
      for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i].name != y[i].name || x[i].values != y[i].values ||
            x[i].default_index != y[i].default_index)
          return false;
      return true;
    };
    return same(a.params_, b.params_) && same(a.full_, b.full_) && a.slot_ == b.slot_;
  }

 private:
  static void validate(const std::vector<HyperParameter>& params) {
    if (params.empty()) throw Error("space must have at least one parameter");
    std::set<std::string> names;
    for (const auto& p : params) {
      if (!names.insert(p.name).second) throw Error("duplicate hyper-parameter '" + p.name + "'");
      if (p.values.empty()) throw Error("hyper-parameter '" + p.name + "' has no values");
      std::set<std::string> labels(p.values.begin(), p.values.end());
      if (labels.size() != p.values.size())
        throw Error("hyper-parameter '" + p.name + "' has duplicate value labels");
      if (p.default_index >= p.values.size())
        throw Error("hyper-parameter '" + p.name + "' default index out of range");
    }
  }

  void check(const Configuration& c) const {
    if (c.genes.size() != params_.size())
      throw Error("configuration has " + std::to_string(c.genes.size()) + " genes, space has " +
                  std::to_string(params_.size()) + " parameters");
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (c.genes[i] >= params_[i].values.size())
        throw Error("gene " + std::to_string(c.genes[i]) + " out of domain for '" + params_[i].name + "'");
  }

  void compute_strides() {
    strides_.assign(params_.size(), 1);
    size_ = 1;
    for (std::size_t i = params_.size(); i-- > 0;) {
      strides_[i] = size_;
      size_ *= params_[i].values.size();
    }
  }

  std::vector<HyperParameter> params_;
  std::vector<HyperParameter> full_;
  std::vector<long> slot_;  // per full parameter: index into params_, or -1 when pinned
  std::vector<std::uint64_t> strides_;
  std::uint64_t size_ = 1;
};

/// The five-parameter GA grid (1200 points). Defaults: crossover 0.75,
/// population 50, elitism 1%, rank selection with bias 1.7, parent check on.
inline HyperParameterSpace builtin_space() {
  return HyperParameterSpace({
      {"crossover_rate", {"0", "0.2", "0.5", "0.75", "0.8", "1"}, 3},
      {"population_size", {"4", "10", "50", "100", "200"}, 2},
      {"elitism_rate", {"0%", "1%", "10%", "50%"}, 1},
      {"selection_function", {"roulette", "tournament_2", "tournament_10", "rank_1.2", "rank_1.7"}, 4},
      {"parent_check", {"true", "false"}, 0},
  });
}

}  // namespace tunegain
