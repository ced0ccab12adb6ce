#include <gtest/gtest.h>

#include <set>

#include "tunegain/search_space.hpp"

using namespace tunegain;

TEST(SearchSpace, BuiltinHas1200Configurations) {
  auto s = builtin_space();
  EXPECT_EQ(s.size(), 6u * 5 * 4 * 5 * 2);
  EXPECT_EQ(s.size(), 1200u);
  auto all = s.enumerate();
  ASSERT_EQ(all.size(), 1200u);
  std::set<Configuration> unique(all.begin(), all.end());
  EXPECT_EQ(unique.size(), 1200u);
}

TEST(SearchSpace, BuiltinDefaults) {
  auto s = builtin_space();
  auto d = s.default_config();
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < d.genes.size(); ++i) labels.push_back(s.params()[i].values[d.genes[i]]);
  EXPECT_EQ(labels, (std::vector<std::string>{"0.75", "50", "1%", "rank_1.7", "true"}));
}

TEST(SearchSpace, SingleAxisEnumeration) {
  HyperParameterSpace s({{"flag", {"a", "b"}, 0}});
  auto all = s.enumerate();
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[0].genes, std::vector<std::size_t>{0});
  EXPECT_EQ(all[1].genes, std::vector<std::size_t>{1});
}

TEST(SearchSpace, IdsAreLexicographicFirstParameterMostSignificant) {
  auto s = builtin_space();
  EXPECT_EQ(s.config_id(Configuration{{0, 0, 0, 0, 0}}), 0u);
  EXPECT_EQ(s.decode(1199).genes, (std::vector<std::size_t>{5, 4, 3, 4, 1}));
  EXPECT_EQ(s.config_id(Configuration{{0, 0, 0, 0, 1}}), 1u);
  EXPECT_EQ(s.config_id(Configuration{{1, 0, 0, 0, 0}}), 200u);
  auto all = s.enumerate();
  for (std::size_t i = 1; i < all.size(); ++i) EXPECT_LT(all[i - 1], all[i]);
}

TEST(SearchSpace, IdRoundTripOverWholeGrid) {
  auto s = builtin_space();
  for (ConfigId id = 0; id < s.size(); ++id) {
    auto c = s.decode(id);
    ASSERT_TRUE(s.contains(c));
    ASSERT_EQ(s.config_id(c), id);
  }
}

TEST(SearchSpace, DecodeAndIdRejectOutOfRange) {
  auto s = builtin_space();
  EXPECT_THROW(s.decode(1200), Error);
  EXPECT_THROW(s.config_id(Configuration{{6, 0, 0, 0, 0}}), Error);
  EXPECT_THROW(s.config_id(Configuration{{0, 0, 0}}), Error);
}

TEST(SearchSpace, ConstructionValidates) {
  EXPECT_THROW(HyperParameterSpace(std::vector<HyperParameter>{}), Error);
  EXPECT_THROW(HyperParameterSpace({{"a", {}, 0}}), Error);
  EXPECT_THROW(HyperParameterSpace({{"a", {"x", "x"}, 0}}), Error);
  EXPECT_THROW(HyperParameterSpace({{"a", {"x"}, 1}}), Error);
  EXPECT_THROW(HyperParameterSpace({{"a", {"x"}, 0}, {"a", {"y"}, 0}}), Error);
}

TEST(SearchSpace, ReductionSizesMatchEliminationTable) {
  auto s = builtin_space();
  auto large = s.reduce({"crossover_rate", "population_size", "elitism_rate", "selection_function"});
  EXPECT_EQ(large.size(), 600u);
  auto medium = s.reduce({"population_size", "elitism_rate", "selection_function"});
  EXPECT_EQ(medium.size(), 100u);
  EXPECT_EQ(medium.enumerate().size(), 100u);
  auto small = medium.reduce({"population_size", "elitism_rate"});
  EXPECT_EQ(small.size(), 20u);
  EXPECT_EQ(small.pinned_names(), (std::vector<std::string>{"crossover_rate", "selection_function", "parent_check"}));
}

TEST(SearchSpace, KeepAllIsIdentity) {
  auto s = builtin_space();
  auto same = s.reduce({"crossover_rate", "population_size", "elitism_rate", "selection_function", "parent_check"});
  EXPECT_TRUE(same == s);
  EXPECT_FALSE(same.is_reduced());
}

TEST(SearchSpace, ReduceRejectsUnknownAndEmpty) {
  auto s = builtin_space();
  EXPECT_THROW(s.reduce({}), Error);
  EXPECT_THROW(s.reduce({"mutation_rate"}), Error);
}

TEST(SearchSpace, ExpandedReducedConfigsPinDefaults) {
  auto s = builtin_space();
  auto medium = s.reduce({"population_size", "elitism_rate", "selection_function"});
  auto def = s.default_config();
  std::set<ConfigId> ids;
  for (const auto& c : medium.enumerate()) {
    auto full = medium.expand(c);
    EXPECT_EQ(full.genes[0], def.genes[0]);
    EXPECT_EQ(full.genes[4], def.genes[4]);
    EXPECT_EQ(s.config_id(full), medium.full_id(c));
    ids.insert(medium.full_id(c));
  }
  EXPECT_EQ(ids.size(), 100u);
  EXPECT_EQ(medium.expand(medium.default_config()), def);
}

TEST(SearchSpace, ManifestRoundTripIsBitExact) {
  auto s = builtin_space();
  std::string a = s.to_json();
  auto back = HyperParameterSpace::from_json(a);
  EXPECT_TRUE(back == s);
  EXPECT_EQ(back.to_json(), a);

  auto medium = s.reduce({"population_size", "elitism_rate", "selection_function"});
  auto mback = HyperParameterSpace::from_json(medium.to_json());
  EXPECT_TRUE(mback == medium);
  EXPECT_EQ(mback.size(), 100u);
}

TEST(SearchSpace, ManifestErrors) {
  EXPECT_THROW(HyperParameterSpace::from_json("not json"), Error);
  EXPECT_THROW(HyperParameterSpace::from_json("{}"), Error);
  EXPECT_THROW(HyperParameterSpace::from_json(R"({"params":[{"name":"a","values":["x"]}]})"), Error);
}
