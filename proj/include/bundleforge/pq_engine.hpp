#ifndef BUNDLEFORGE_PQ_ENGINE_HPP
#define BUNDLEFORGE_PQ_ENGINE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bundleforge/core_model.hpp"
#include "bundleforge/milp.hpp"

namespace bundleforge {

class UnsupportedObjectiveError : public Error { using Error::Error; };
class CapacityError : public Error { using Error::Error; };
/// The branch-and-bound node budget ran out before optimality was proven.
class SearchLimitError : public Error { using Error::Error; };

struct PackageQuery {
    const Dataset* target = nullptr;
    ConstraintBounds bounds;
    Objective objective;
};

/// Row kinds of a compiled package query.
struct RowOrigin {
    enum class Kind { Constraint, MinLink, NonEmpty } kind = Kind::Constraint;
    std::size_t constraint = 0;  // index into ConstraintBounds when kind == Constraint
};

/// 0/1 program for a package query. Variables 0..n-1 are the tuples in
/// dataset order; an auxiliary variable follows them for MIN/MAX objectives.
struct IlpModel {
    milp::Problem problem;
    std::vector<RowOrigin> row_origin;
    std::size_t tuple_count = 0;
    const Dataset* target = nullptr;
    ConstraintBounds bounds;
    Objective objective;
};

struct SolveStats {
    std::uint64_t nodes = 0;
    double wall_seconds = 0.0;
    /// False when a large model hit its node budget and the incumbent was returned.
    bool proven_optimal = true;
    /// Absolute gap between the returned objective and the best open bound.
    double gap = 0.0;
    std::vector<std::string> warnings;
};

struct Solution {
    enum class Status { Optimal, Infeasible } status = Status::Infeasible;
    std::optional<Bundle> bundle;
    std::optional<double> objective_value;
    std::vector<std::size_t> violated;  // populated when infeasible
    SolveStats stats;

    bool optimal() const { return status == Status::Optimal; }
};

struct EngineOptions {
    std::size_t exact_mode_limit = 64;
    std::size_t hard_variable_cap = 10000;
    std::uint64_t node_limit = 500000;
    /// Budget for each phase of the elastic program.
    std::uint64_t elastic_node_limit = 20000;
    double tol = 1e-9;
    /// Above exact_mode_limit tuples: stop at this relative gap, and on
    /// exhausting large_model_node_limit return the incumbent unproven.
    double large_model_gap = 1e-4;
    std::uint64_t large_model_node_limit = 50000;
};

IlpModel build_ilp(const PackageQuery& query);

Solution solve_exact(const IlpModel& model, const EngineOptions& opts = {});

/// Constraint indices (features, then cardinality at K) with positive slack
/// in a slack-minimal elastic solution. Ties among slack-minimal solutions go
/// to the one with the best query objective. Empty iff the model is feasible
/// (up to the node budget).
std::vector<std::size_t> identify_violations(const IlpModel& model, const EngineOptions& opts = {});

/// Solves the query; when infeasible, fills Solution::violated.
Solution execute(const PackageQuery& query, const EngineOptions& opts = {});

/// Returns the violated constraint set for given bounds (empty when feasible).
using FeasibilityOracle = std::function<std::vector<std::size_t>(const ConstraintBounds&)>;

FeasibilityOracle make_feasibility_oracle(const Dataset& target, const Objective& objective,
                                          const EngineOptions& opts = {});

/// True when some bundle satisfies the bounds (first-feasible search).
bool is_feasible(const Dataset& target, const ConstraintBounds& bounds, const EngineOptions& opts = {});

std::string to_lp_format(const IlpModel& model);

}  // namespace bundleforge

#endif  // BUNDLEFORGE_PQ_ENGINE_HPP
