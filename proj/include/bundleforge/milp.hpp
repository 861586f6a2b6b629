#ifndef BUNDLEFORGE_MILP_HPP
#define BUNDLEFORGE_MILP_HPP

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace bundleforge::milp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Sparse row lo <= sum(coef * x[var]) <= hi.
struct Row {
    std::vector<std::pair<std::size_t, double>> terms;
    double lo = -kInf;
    double hi = kInf;
    std::string name;
};

/// Minimization problem over bounded variables, some of them integer.
struct Problem {
    std::vector<double> cost;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<bool> integer;
    std::vector<std::string> var_names;
    std::vector<Row> rows;

    std::size_t add_var(double c, double lo, double hi, bool is_int, std::string name = {});
    std::size_t num_vars() const { return cost.size(); }
};

enum class Status { Optimal, Infeasible, Unbounded, NodeLimit };

const char* to_string(Status s);

struct LpResult {
    Status status = Status::Infeasible;
    double objective = 0.0;
    std::vector<double> x;
    std::size_t iterations = 0;
};

/// Bounded-variable revised simplex (two phases, Dantzig pricing with a Bland
/// fallback under degeneracy). `lower`/`upper` override the problem's bounds.
LpResult solve_lp(const Problem& p, const std::vector<double>& lower, const std::vector<double>& upper,
                  double tol = 1e-9);
LpResult solve_lp(const Problem& p, double tol = 1e-9);

struct MilpOptions {
    std::uint64_t node_limit = 500000;
    double feas_tol = 1e-9;
    double obj_tol = 1e-9;
    /// Stop at the first integer-feasible point (feasibility probes).
    bool first_feasible = false;
    /// Prune nodes whose bound is within rel_gap * |incumbent| of the incumbent.
    double rel_gap = 0.0;
    /// Start a rounding dive every this many nodes (0 disables diving).
    std::uint64_t dive_interval = 256;
    /// Polish new incumbents of pure 0/1 problems with flip/swap moves.
    bool local_search = true;
};

struct MilpResult {
    Status status = Status::Infeasible;
    double objective = 0.0;
    std::vector<double> x;
    std::uint64_t nodes = 0;
    /// True when an incumbent exists (always true for Optimal; may be true for NodeLimit).
    bool has_incumbent = false;
    /// Lowest open-node bound when the search stopped early.
    double best_bound = 0.0;
};

/// Exact LP-based branch-and-bound. Best-bound node selection (ties: deeper
/// first, then creation order); branches on the most fractional variable
/// (ties: lowest index), up-branch created first. Fully deterministic.
MilpResult solve_milp(const Problem& p, const MilpOptions& opts = {});

/// Row activity check outside the solver.
bool is_feasible_point(const Problem& p, const std::vector<double>& x, double tol = 1e-9);

/// LP text format (CPLEX-LP dialect) for debugging against external solvers.
std::string to_lp_format(const Problem& p);

}  // namespace bundleforge::milp

#endif  // BUNDLEFORGE_MILP_HPP
