#include "newstrust/sampler.hpp"

#include "newstrust/errors.hpp"
#include "newstrust/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace newstrust {

LevelDistribution compute_distribution(const std::vector<Source>& sources, Topic topic) {
    std::array<std::size_t, kTrustLevelCount> counts{};
    std::size_t n = 0;
    for (const auto& s : sources) {
        if (s.topic != topic) continue;
        ++counts[static_cast<std::size_t>(s.trust_level().index)];
        ++n;
    }
    if (n == 0)
        throw EmptyStratumError("no sources for topic " + std::string(topic_id(topic)));
    LevelDistribution d;
    d.topic = topic;
    for (std::size_t l = 0; l < kTrustLevelCount; ++l)
        d.proportions[l] = static_cast<double>(counts[l]) / static_cast<double>(n);
    return d;
}

std::array<int, kTrustLevelCount> allocate(const LevelDistribution& dist, int total) {
    if (total < 1) throw ValidationError("sample total must be >= 1");
    const double sum = std::accumulate(dist.proportions.begin(), dist.proportions.end(), 0.0);
    if (!(sum > 0)) throw EmptyStratumError("distribution has no mass");

    std::array<int, kTrustLevelCount> alloc{};
    std::array<double, kTrustLevelCount> remainder{};
    int assigned = 0;
    for (std::size_t l = 0; l < kTrustLevelCount; ++l) {
        const double p = dist.proportions[l];
        if (p < 0 || !std::isfinite(p)) throw ValidationError("invalid proportion");
        const double quota = p / sum * total;
        // absorb representation error so exact quotas such as 0.3*10 floor to 3
        const double floored = std::floor(quota + 1e-9);
        alloc[l] = static_cast<int>(floored);
        remainder[l] = p > 0 ? std::max(0.0, quota - floored) : -1.0;
        assigned += alloc[l];
    }

    std::array<std::size_t, kTrustLevelCount> order{};
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        // treat remainders within 1e-9 as tied so the index rule decides
        if (std::abs(remainder[a] - remainder[b]) > 1e-9) return remainder[a] > remainder[b];
        return a < b;
    });
    for (std::size_t i = 0; assigned < total; i = (i + 1) % kTrustLevelCount) {
        if (dist.proportions[order[i]] <= 0) continue;
        ++alloc[order[i]];
        ++assigned;
    }
    return alloc;
}

SamplePlan make_plan(const LevelDistribution& dist, int total, std::uint64_t seed) {
    SamplePlan plan;
    plan.topic = dist.topic;
    plan.total = total;
    plan.allocation = allocate(dist, total);
    plan.seed = seed;
    return plan;
}

std::vector<Source> stratified_sample(const std::vector<Source>& sources, const SamplePlan& plan) {
    std::array<std::vector<Source>, kTrustLevelCount> strata;
    for (const auto& s : sources) {
        if (s.topic != plan.topic || !admit_source(s).accepted) continue;
        strata[static_cast<std::size_t>(s.trust_level().index)].push_back(s);
    }
    for (std::size_t l = 0; l < kTrustLevelCount; ++l) {
        if (plan.allocation[l] < 0) throw ValidationError("negative allocation");
        if (strata[l].size() < static_cast<std::size_t>(plan.allocation[l]))
            throw InfeasiblePlanError(
                "level '" + std::string(trust_levels()[l].name) + "' needs " +
                std::to_string(plan.allocation[l]) + " sources but only " +
                std::to_string(strata[l].size()) + " are admitted");
    }

    Rng rng(plan.seed);
    std::vector<Source> out;
    for (std::size_t l = 0; l < kTrustLevelCount; ++l) {
        auto& stratum = strata[l];
        // canonical order first so the draw depends only on the set and the seed
        std::sort(stratum.begin(), stratum.end(),
                  [](const Source& a, const Source& b) { return a.domain < b.domain; });
        const auto want = static_cast<std::size_t>(plan.allocation[l]);
        // partial Fisher-Yates: the first `want` slots are a uniform draw
        for (std::size_t i = 0; i < want; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(stratum.size() - i));
            std::swap(stratum[i], stratum[j]);
        }
        std::vector<Source> picked(stratum.begin(), stratum.begin() + static_cast<long>(want));
        std::sort(picked.begin(), picked.end(),
                  [](const Source& a, const Source& b) { return a.domain < b.domain; });
        for (auto& s : picked) out.push_back(std::move(s));
    }
    return out;
}

void to_json(nlohmann::json& j, const LevelDistribution& d) {
    auto props = nlohmann::json::object();
    for (const auto& l : trust_levels())
        props[std::string(l.name)] = d.proportions[static_cast<std::size_t>(l.index)];
    j = {{"topic", topic_id(d.topic)}, {"proportions", props}};
}

void to_json(nlohmann::json& j, const SamplePlan& p) {
    auto alloc = nlohmann::json::object();
    for (const auto& l : trust_levels())
        alloc[std::string(l.name)] = p.allocation[static_cast<std::size_t>(l.index)];
    j = {{"topic", topic_id(p.topic)},
         {"total", p.total},
         {"allocation", alloc},
         {"seed", p.seed},
         {"rng", Rng::kName}};
}

}  // namespace newstrust
