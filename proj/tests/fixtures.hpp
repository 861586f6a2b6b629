// Shared test fixtures and brute-force oracles.
#ifndef BUNDLEFORGE_TESTS_FIXTURES_HPP
#define BUNDLEFORGE_TESTS_FIXTURES_HPP

#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bundleforge/core_model.hpp"
#include "bundleforge/pipeline.hpp"

namespace fixtures {

using namespace bundleforge;

inline Schema faculty_schema() { return Schema({"ai", "db", "teaching"}); }

// Four hiring candidates; score = recommendation strength.
inline Dataset candidates() {
    return Dataset("candidates", faculty_schema(),
                   {{"Smith", {0.8, 0.4, 0.1}, 0.4, {}},
                    {"Jones", {0.4, 0.7, 0.2}, 0.9, {}},
                    {"Neo", {0.4, 0.5, 0.4}, 0.8, {}},
                    {"Brown", {0.5, 0.4, 0.4}, 0.9, {}}});
}

inline std::map<std::string, Dataset> universities() {
    std::map<std::string, Dataset> m;
    m.emplace("univx", Dataset("univx", faculty_schema(),
                               {{"Trinity", {0.6, 0.5, 0.3}, 0.7, {}}, {"Cypher", {0.2, 0.8, 0.4}, 0.9, {}}},
                               DatasetRole::Source));
    m.emplace("univy", Dataset("univy", faculty_schema(),
                               {{"Link", {0.9, 0.3, 0.4}, 0.6, {}},
                                {"Niobe", {0.2, 0.3, 0.6}, 0.8, {}},
                                {"Seraph", {0.1, 0.4, 0.3}, 0.7, {}}},
                               DatasetRole::Source));
    return m;
}

inline std::vector<Bundle> hires() {
    return {Bundle("univx", {"Trinity", "Cypher"}), Bundle("univy", {"Link", "Niobe", "Seraph"})};
}

inline std::string data_dir() { return BUNDLEFORGE_TEST_DATA; }

/// Exhaustive optimum over all 2^n subsets (SUM objectives).
struct BruteResult {
    bool feasible = false;
    double objective = 0.0;
    std::vector<std::size_t> indices;
};

inline BruteResult brute_force(const Dataset& d, const ConstraintBounds& b, const Objective& obj,
                               double tol = 1e-9) {
    BruteResult best;
    const std::size_t n = d.size();
    const bool maximize = obj.direction == Direction::Maximize;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask >> i & 1) idx.push_back(i);
        }
        if (!satisfies(b, d, idx, tol)) continue;
        double v = 0.0;
        for (std::size_t i : idx) v += obj.score_source == ScoreSource::ConstantOne ? 1.0 : d.at(i).score;
        if (!best.feasible || (maximize ? v > best.objective : v < best.objective)) {
            best = {true, v, idx};
        }
    }
    return best;
}

/// Minimum total bound violation over all subsets (elastic oracle).
inline double brute_min_slack(const Dataset& d, const ConstraintBounds& b) {
    double best = INFINITY;
    const std::size_t n = d.size();
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask >> i & 1) idx.push_back(i);
        }
        auto prof = sum_profile(d, idx);
        double s = 0.0;
        for (std::size_t c = 0; c < b.constraint_count(); ++c) {
            double v = c < prof.size() ? prof[c] : static_cast<double>(idx.size());
            Interval iv = b.constraint(c);
            s += std::max(0.0, iv.lb - v) + std::max(0.0, v - iv.ub);
        }
        best = std::min(best, s);
    }
    return best;
}

/// Random instance: n tuples, k features, features and scores on a 0.05 grid,
/// bounds drawn around random subset profiles so roughly half are feasible.
struct RandomInstance {
    Dataset data;
    ConstraintBounds bounds;
    Objective objective;
};

inline RandomInstance random_instance(std::mt19937_64& rng, std::size_t n, std::size_t k) {
    auto grid = [&](int hi) { return static_cast<double>(rng() % static_cast<std::uint64_t>(hi + 1)) * 0.05; };
    std::vector<std::string> names;
    for (std::size_t j = 0; j < k; ++j) names.push_back("f" + std::to_string(j));
    std::vector<Tuple> tuples;
    for (std::size_t i = 0; i < n; ++i) {
        Tuple t;
        t.id = "t" + std::to_string(i);
        for (std::size_t j = 0; j < k; ++j) t.features.push_back(grid(20));
        t.score = grid(20);
        tuples.push_back(std::move(t));
    }
    Dataset d("rand", Schema(names), std::move(tuples));
    ConstraintBounds b;
    for (std::size_t j = 0; j < k; ++j) {
        double total = d.feature_totals()[j];
        double a = total * static_cast<double>(rng() % 1000) / 1000.0;
        double w = total * static_cast<double>(rng() % 400) / 1000.0;
        b.features.push_back({a * 0.6, a * 0.6 + w});
    }
    if (rng() % 3 == 0) {
        long long lo = static_cast<long long>(rng() % (n / 2 + 1));
        b.cardinality = CardinalityBounds{lo, lo + static_cast<long long>(rng() % 4)};
    }
    Objective obj;
    switch (rng() % 3) {
        case 0: obj = Objective::maximize_sum(); break;
        case 1: obj = Objective::minimize_sum(); break;
        default: obj = Objective::count(rng() % 2 ? Direction::Maximize : Direction::Minimize); break;
    }
    return {std::move(d), std::move(b), obj};
}

}  // namespace fixtures

#endif  // BUNDLEFORGE_TESTS_FIXTURES_HPP
