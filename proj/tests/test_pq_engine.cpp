#include <doctest.h>

#include <random>

#include "bundleforge/pq_engine.hpp"
#include "fixtures.hpp"

using namespace bundleforge;

namespace {

ConstraintBounds q2_bounds() {
    ConstraintBounds b;
    b.features = {{0.8, 1.2}, {1.0, 1.3}, {0.7, 1.3}};
    b.cardinality = CardinalityBounds{2, 2};
    return b;
}

}  // namespace

TEST_CASE("Q2 compiles to four binaries and four rows") {
    Dataset c = fixtures::candidates();
    IlpModel m = build_ilp({&c, q2_bounds(), Objective::maximize_sum()});
    CHECK(m.problem.num_vars() == 4);
    CHECK(m.problem.rows.size() == 4);
    CHECK(m.problem.rows[0].lo == 0.8);
    CHECK(m.problem.rows[2].hi == 1.3);
    CHECK(m.problem.cost[1] == doctest::Approx(-0.9));
}

TEST_CASE("Q2 is infeasible and blames teaching") {
    Dataset c = fixtures::candidates();
    auto sol = execute({&c, q2_bounds(), Objective::maximize_sum()});
    CHECK_FALSE(sol.optimal());
    CHECK(sol.violated == std::vector<std::size_t>{2});
}

TEST_CASE("Q2 with relaxed db and teaching returns Jones and Brown") {
    Dataset c = fixtures::candidates();
    ConstraintBounds b = q2_bounds();
    b.features[1].lb = 0.9;
    b.features[2].lb = 0.6;
    auto sol = execute({&c, b, Objective::maximize_sum()});
    REQUIRE(sol.optimal());
    CHECK(sol.bundle->tuple_ids() == std::vector<std::string>{"Brown", "Jones"});
    CHECK(*sol.objective_value == doctest::Approx(1.8).epsilon(1e-12));
}

TEST_CASE("fully relaxed bounds select everything") {
    Dataset c = fixtures::candidates();
    ConstraintBounds b;
    for (double t : c.feature_totals()) b.features.push_back({0.0, t});
    auto sol = execute({&c, b, Objective::maximize_sum()});
    REQUIRE(sol.optimal());
    CHECK(sol.bundle->size() == 4);
    CHECK(*sol.objective_value == doctest::Approx(3.0));
}

TEST_CASE("atomic tuples cannot meet a fractional target") {
    Dataset one("one", Schema({"f"}), {{"t", {0.4}, 1.0, {}}});
    ConstraintBounds b;
    b.features = {{0.5, INFINITY}};
    auto sol = execute({&one, b, Objective::maximize_sum()});
    CHECK_FALSE(sol.optimal());
    CHECK(sol.violated == std::vector<std::size_t>{0});
}

TEST_CASE("unsupported objectives and capacity") {
    Dataset c = fixtures::candidates();
    CHECK_THROWS_AS(build_ilp({&c, q2_bounds(), objective_from_string("max-avg")}), UnsupportedObjectiveError);
    CHECK_THROWS_AS(build_ilp({&c, q2_bounds(), objective_from_string("min-min")}), UnsupportedObjectiveError);
    ConstraintBounds bad;
    bad.features = {{0, 1}};
    CHECK_THROWS_AS(build_ilp({&c, bad, Objective::maximize_sum()}), SchemaError);
    EngineOptions o;
    o.hard_variable_cap = 3;
    IlpModel m = build_ilp({&c, q2_bounds(), Objective::maximize_sum()});
    CHECK_THROWS_AS(solve_exact(m, o), CapacityError);
}

TEST_CASE("max-min objective") {
    Dataset c = fixtures::candidates();
    ConstraintBounds b;
    b.features = {{0, 10}, {0, 10}, {0, 10}};
    b.cardinality = CardinalityBounds{2, 2};
    auto sol = execute({&c, b, objective_from_string("max-min")});
    REQUIRE(sol.optimal());
    CHECK(*sol.objective_value == doctest::Approx(0.9));
}

TEST_CASE("solver agrees with exhaustive enumeration") {
    std::mt19937_64 rng(2024);
    int feasible = 0;
    for (int trial = 0; trial < 150; ++trial) {
        std::size_t n = 4 + rng() % 9;
        std::size_t k = 1 + rng() % 4;
        auto inst = fixtures::random_instance(rng, n, k);
        auto brute = fixtures::brute_force(inst.data, inst.bounds, inst.objective);
        auto sol = execute({&inst.data, inst.bounds, inst.objective});
        REQUIRE(sol.optimal() == brute.feasible);
        if (brute.feasible) {
            ++feasible;
            CHECK(*sol.objective_value == doctest::Approx(brute.objective).epsilon(1e-9));
        } else {
            CHECK_FALSE(sol.violated.empty());
        }
    }
    CHECK(feasible > 20);
}

TEST_CASE("elastic violations carry minimal slack") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 80; ++trial) {
        auto inst = fixtures::random_instance(rng, 8, 3);
        IlpModel m = build_ilp({&inst.data, inst.bounds, Objective::maximize_sum()});
        auto viol = identify_violations(m);
        double min_slack = fixtures::brute_min_slack(inst.data, inst.bounds);
        CHECK(viol.empty() == (min_slack <= 1e-9));
        if (viol.empty()) continue;
        // Some slack-minimal subset violates exactly the reported set.
        bool witnessed = false;
        for (std::uint64_t mask = 0; mask < (1u << inst.data.size()) && !witnessed; ++mask) {
            std::vector<std::size_t> idx;
            for (std::size_t i = 0; i < inst.data.size(); ++i) {
                if (mask >> i & 1) idx.push_back(i);
            }
            auto prof = sum_profile(inst.data, idx);
            double s = 0;
            std::vector<std::size_t> v;
            for (std::size_t c = 0; c < inst.bounds.constraint_count(); ++c) {
                double val = c < prof.size() ? prof[c] : static_cast<double>(idx.size());
                Interval iv = inst.bounds.constraint(c);
                double e = std::max(0.0, iv.lb - val) + std::max(0.0, val - iv.ub);
                if (e > 1e-9) v.push_back(c);
                s += e;
            }
            witnessed = std::abs(s - min_slack) <= 1e-7 && v == viol;
        }
        CHECK(witnessed);
    }
}

TEST_CASE("inverted intervals are infeasible, not errors") {
    Dataset c = fixtures::candidates();
    ConstraintBounds b;
    b.features = {{0, 10}, {0, 10}, {0.7, 0.6}};
    auto sol = execute({&c, b, Objective::maximize_sum()});
    CHECK_FALSE(sol.optimal());
    CHECK(sol.violated == std::vector<std::size_t>{2});
    CHECK_FALSE(is_feasible(c, b));
}

TEST_CASE("lp dump of a package query") {
    Dataset c = fixtures::candidates();
    std::string s = to_lp_format(build_ilp({&c, q2_bounds(), Objective::maximize_sum()}));
    CHECK(s.find("f_teaching") != std::string::npos);
    CHECK(s.find("Binaries") != std::string::npos);
}

TEST_CASE("max-min and min-max agree with enumeration") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 120; ++trial) {
        std::size_t n = 3 + rng() % 8;
        auto inst = fixtures::random_instance(rng, n, 2);
        const bool is_min = trial % 2 == 0;
        Objective obj = objective_from_string(is_min ? "max-min" : "min-max");
        bool feasible = false;
        double best = 0;
        for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
            std::vector<std::size_t> idx;
            for (std::size_t i = 0; i < n; ++i) {
                if (mask >> i & 1) idx.push_back(i);
            }
            if (!satisfies(inst.bounds, inst.data, idx)) continue;
            double v = inst.data.at(idx[0]).score;
            for (std::size_t i : idx) {
                v = is_min ? std::min(v, inst.data.at(i).score) : std::max(v, inst.data.at(i).score);
            }
            if (!feasible || (is_min ? v > best : v < best)) best = v;
            feasible = true;
        }
        auto sol = execute({&inst.data, inst.bounds, obj});
        REQUIRE(sol.optimal() == feasible);
        if (feasible) CHECK(*sol.objective_value == doctest::Approx(best));
    }
}
