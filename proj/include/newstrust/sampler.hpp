#pragma once

#include "newstrust/registry.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace newstrust {

// Fraction of a topic's sources in each trust level, indexed by level index.
struct LevelDistribution {
    Topic topic = Topic::political;
    std::array<double, kTrustLevelCount> proportions{};
};

struct SamplePlan {
    Topic topic = Topic::political;
    int total = 0;
    std::array<int, kTrustLevelCount> allocation{};
    std::uint64_t seed = 0;
};

LevelDistribution compute_distribution(const std::vector<Source>& sources, Topic topic);

// Largest-remainder apportionment of `total` seats over the levels. Equal
// remainders go to the lower trust index first.
std::array<int, kTrustLevelCount> allocate(const LevelDistribution& dist, int total);

SamplePlan make_plan(const LevelDistribution& dist, int total, std::uint64_t seed);

// Draws allocation[l] sources of plan.topic from each level without
// replacement. Non-admitted sources are ignored. Output is ordered by level
// index, then domain.
std::vector<Source> stratified_sample(const std::vector<Source>& sources, const SamplePlan& plan);

void to_json(nlohmann::json& j, const LevelDistribution& d);
void to_json(nlohmann::json& j, const SamplePlan& p);

}  // namespace newstrust
