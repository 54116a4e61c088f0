#include <algorithm>
#include <cmath>
#include <set>

#include "autocenet/data.hpp"

namespace autocenet {

namespace {

std::size_t count_for(double fraction, std::size_t n) {
    const auto c = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    return std::clamp<std::size_t>(c, 1, n);
}

}  // namespace

FoldPlan plan_folds(const std::vector<std::string>& case_ids, std::uint64_t seed, const FoldOptions& options) {
    if (std::set<std::string>(case_ids.begin(), case_ids.end()).size() != case_ids.size()) {
        throw ConfigError("plan_folds: case ids must be unique");
    }
    if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0)) {
        throw ConfigError("plan_folds: test fraction must be in (0, 1)");
    }
    const std::size_t n = case_ids.size();
    const std::size_t needed = options.mode == FoldMode::two_fold ? 3 : 2;
    if (n < needed) {
        throw ConfigError("plan_folds: " + std::to_string(n) + " cases are not enough, need at least " +
                          std::to_string(needed));
    }

    FoldPlan plan;
    plan.seed = seed;
    plan.mode = options.mode;

    std::vector<std::string> shuffled = case_ids;
    std::mt19937_64 rng(seed);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);

    const std::size_t n_test = std::min(count_for(options.test_fraction, n), n - (needed - 1));
    plan.test.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_test));
    plan.pool.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_test), shuffled.end());

    if (options.mode == FoldMode::two_fold) {
        const auto half = plan.pool.begin() + static_cast<std::ptrdiff_t>((plan.pool.size() + 1) / 2);
        std::vector<std::string> a(plan.pool.begin(), half), b(half, plan.pool.end());
        plan.folds.push_back({a, b});
        plan.folds.push_back({b, a});
        return plan;
    }

    if (options.fractions.empty()) throw ConfigError("plan_folds: no training fractions given");
    std::size_t used = 0;
    for (double f : options.fractions) {
        if (!(f > 0.0 && f <= 1.0)) throw ConfigError("plan_folds: fractions must be in (0, 1]");
        const std::size_t c = count_for(f, plan.pool.size());
        FractionSplit split{f, {}};
        if (options.policy == SubsetPolicy::nested) {
            split.train.assign(plan.pool.begin(), plan.pool.begin() + static_cast<std::ptrdiff_t>(c));
        } else {
            if (used + c > plan.pool.size()) {
                throw ConfigError("plan_folds: disjoint subsets need more cases than the training pool holds");
            }
            split.train.assign(plan.pool.begin() + static_cast<std::ptrdiff_t>(used),
                               plan.pool.begin() + static_cast<std::ptrdiff_t>(used + c));
            used += c;
        }
        plan.fractions.push_back(std::move(split));
    }
    return plan;
}

}  // namespace autocenet
