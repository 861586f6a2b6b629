#include "bundleforge/pq_engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace bundleforge {

namespace {

double tuple_score(const Tuple& t, const Objective& o) {
    if (o.aggregate == Aggregator::Count || o.score_source == ScoreSource::ConstantOne) return 1.0;
    return t.score;
}

}  // namespace

IlpModel build_ilp(const PackageQuery& query) {
    if (query.target == nullptr) throw ArgumentError("package query has no target dataset");
    const Dataset& data = *query.target;
    const std::size_t k = data.schema().size();
    if (query.bounds.features.size() != k) {
        throw SchemaError("bounds have " + std::to_string(query.bounds.features.size()) +
                          " feature entries, target schema has " + std::to_string(k));
    }
    const Objective& obj = query.objective;
    if (obj.aggregate == Aggregator::Avg) {
        throw UnsupportedObjectiveError("AVG objectives are nonlinear over 0/1 selections and are not supported");
    }
    if (obj.aggregate == Aggregator::Min && obj.direction == Direction::Minimize) {
        throw UnsupportedObjectiveError("minimizing a MIN objective is not linearizable with one auxiliary variable");
    }
    if (obj.aggregate == Aggregator::Max && obj.direction == Direction::Maximize) {
        throw UnsupportedObjectiveError("maximizing a MAX objective is not linearizable with one auxiliary variable");
    }

    IlpModel m;
    m.target = query.target;
    m.bounds = query.bounds;
    m.objective = obj;
    m.tuple_count = data.size();
    auto& p = m.problem;
    const double sign = obj.direction == Direction::Maximize ? -1.0 : 1.0;
    const bool linear = obj.aggregate == Aggregator::Sum || obj.aggregate == Aggregator::Count;

    for (std::size_t i = 0; i < data.size(); ++i) {
        double c = linear ? sign * tuple_score(data.at(i), obj) : 0.0;
        p.add_var(c, 0.0, 1.0, true, "x" + std::to_string(i));
    }

    for (std::size_t j = 0; j < k; ++j) {
        milp::Row row;
        for (std::size_t i = 0; i < data.size(); ++i) {
            double f = data.at(i).features[j];
            if (f != 0.0) row.terms.emplace_back(i, f);
        }
        row.lo = query.bounds.features[j].lb;
        row.hi = query.bounds.features[j].ub;
        row.name = "f_" + data.schema().name(j);
        p.rows.push_back(std::move(row));
        m.row_origin.push_back({RowOrigin::Kind::Constraint, j});
    }
    if (query.bounds.cardinality) {
        milp::Row row;
        for (std::size_t i = 0; i < data.size(); ++i) row.terms.emplace_back(i, 1.0);
        Interval c = query.bounds.constraint(k);
        row.lo = c.lb;
        row.hi = c.ub;
        row.name = "cardinality";
        p.rows.push_back(std::move(row));
        m.row_origin.push_back({RowOrigin::Kind::Constraint, k});
    }

    if (!linear) {
        // MIN: m <= s_t + M (1 - x_t)  <=>  m + M x_t <= s_t + M, maximize m.
        // MAX: m >= s_t - M (1 - x_t)  <=>  m - M x_t >= s_t - M, minimize m.
        // With m in [lo, hi] and M = hi - lo, an unselected tuple never binds.
        double lo = 0.0, hi = 0.0;
        if (data.size() > 0) {
            lo = hi = data.at(0).score;
            for (const auto& t : data.tuples()) {
                lo = std::min(lo, t.score);
                hi = std::max(hi, t.score);
            }
        }
        const double big_m = hi - lo;
        const bool is_min = obj.aggregate == Aggregator::Min;
        std::size_t aux = p.add_var(is_min ? -1.0 : 1.0, lo, hi, false, "m");
        for (std::size_t i = 0; i < data.size(); ++i) {
            double s = data.at(i).score;
            milp::Row row;
            row.name = "link" + std::to_string(i);
            if (is_min) {
                row.terms = {{aux, 1.0}, {i, big_m}};
                row.hi = s + big_m;
            } else {
                row.terms = {{aux, 1.0}, {i, -big_m}};
                row.lo = s - big_m;
            }
            p.rows.push_back(std::move(row));
            m.row_origin.push_back({RowOrigin::Kind::MinLink, 0});
        }
        milp::Row nonempty;
        for (std::size_t i = 0; i < data.size(); ++i) nonempty.terms.emplace_back(i, 1.0);
        nonempty.lo = 1.0;
        nonempty.name = "nonempty";
        p.rows.push_back(std::move(nonempty));
        m.row_origin.push_back({RowOrigin::Kind::NonEmpty, 0});
    }
    return m;
}

namespace {

std::vector<std::size_t> selected_indices(const std::vector<double>& x, std::size_t n) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] > 0.5) out.push_back(i);
    }
    return out;
}

void check_capacity(const IlpModel& model, const EngineOptions& opts, SolveStats& stats) {
    if (model.tuple_count > opts.hard_variable_cap) {
        throw CapacityError("model has " + std::to_string(model.tuple_count) + " tuple variables; cap is " +
                            std::to_string(opts.hard_variable_cap));
    }
    if (model.tuple_count > opts.exact_mode_limit) {
        stats.warnings.push_back("model has " + std::to_string(model.tuple_count) +
                                 " variables; solved to relative gap " + std::to_string(opts.large_model_gap));
    }
}

}  // namespace

Solution solve_exact(const IlpModel& model, const EngineOptions& opts) {
    auto t0 = std::chrono::steady_clock::now();
    Solution sol;
    check_capacity(model, opts, sol.stats);

    const bool large = model.tuple_count > opts.exact_mode_limit;
    milp::MilpOptions mo;
    mo.node_limit = large ? opts.large_model_node_limit : opts.node_limit;
    mo.feas_tol = opts.tol;
    mo.obj_tol = opts.tol;
    if (large) mo.rel_gap = opts.large_model_gap;
    milp::MilpResult r = milp::solve_milp(model.problem, mo);
    sol.stats.nodes = r.nodes;
    sol.stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (r.status == milp::Status::NodeLimit) {
        if (!large || !r.has_incumbent) {
            throw SearchLimitError("branch-and-bound node limit (" + std::to_string(mo.node_limit) +
                                   ") reached before " + (r.has_incumbent ? "optimality was proven" : "any feasible bundle was found"));
        }
        sol.stats.proven_optimal = false;
        sol.stats.gap = std::max(0.0, r.objective - r.best_bound);
        sol.stats.warnings.push_back("node budget reached; returning best bundle found (objective gap " +
                                     std::to_string(sol.stats.gap) + ")");
        r.status = milp::Status::Optimal;
    } else if (large && r.status == milp::Status::Optimal) {
        sol.stats.gap = std::max(0.0, opts.large_model_gap * std::abs(r.objective));
    }
    if (r.status != milp::Status::Optimal) {
        sol.status = Solution::Status::Infeasible;
        return sol;
    }
    auto idx = selected_indices(r.x, model.tuple_count);
    // Post-hoc verification, independent of the solver's own row checks.
    if (!satisfies(model.bounds, *model.target, idx, opts.tol)) {
        throw std::logic_error("solver returned a bundle that violates the query bounds");
    }
    sol.status = Solution::Status::Optimal;
    sol.bundle = bundle_from_indices(*model.target, idx);
    if (idx.empty() && (model.objective.aggregate == Aggregator::Min || model.objective.aggregate == Aggregator::Max)) {
        sol.objective_value = std::nullopt;
    } else {
        sol.objective_value = objective_value(*sol.bundle, *model.target, model.objective);
    }
    return sol;
}

std::vector<std::size_t> identify_violations(const IlpModel& model, const EngineOptions& opts) {
    const std::size_t base_vars = model.problem.num_vars();
    milp::Problem p;
    p.lower = model.problem.lower;
    p.upper = model.problem.upper;
    p.integer = model.problem.integer;
    p.var_names = model.problem.var_names;
    p.cost.assign(base_vars, 0.0);

    struct Slack {
        std::size_t constraint;
        std::size_t minus;
        std::size_t plus;
    };
    std::vector<Slack> slacks;
    for (std::size_t r = 0; r < model.problem.rows.size(); ++r) {
        const auto& row = model.problem.rows[r];
        const auto& origin = model.row_origin[r];
        if (origin.kind != RowOrigin::Kind::Constraint) {
            p.rows.push_back(row);
            continue;
        }
        Slack s{origin.constraint, 0, 0};
        s.minus = p.add_var(1.0, 0.0, milp::kInf, false, "sm_" + row.name);
        s.plus = p.add_var(1.0, 0.0, milp::kInf, false, "sp_" + row.name);
        // Two one-sided rows so an inverted interval still yields a finite slack.
        if (std::isfinite(row.lo)) {
            milp::Row lo = row;
            lo.terms.emplace_back(s.minus, 1.0);
            lo.hi = milp::kInf;
            lo.name = row.name + "_lo";
            p.rows.push_back(std::move(lo));
        }
        if (std::isfinite(row.hi)) {
            milp::Row hi = row;
            hi.terms.emplace_back(s.plus, -1.0);
            hi.lo = -milp::kInf;
            hi.name = row.name + "_hi";
            p.rows.push_back(std::move(hi));
        }
        slacks.push_back(s);
    }

    milp::MilpOptions mo;
    mo.node_limit = opts.elastic_node_limit;
    mo.feas_tol = opts.tol;
    mo.obj_tol = opts.tol;
    milp::MilpResult phase_a = milp::solve_milp(p, mo);
    if (!phase_a.has_incumbent) {
        // Only hard rows (MIN links, non-emptiness) can make the elastic program
        // infeasible: that happens on an empty target. Blame every constraint.
        std::vector<std::size_t> all;
        for (const auto& s : slacks) all.push_back(s.constraint);
        return all;
    }
    if (phase_a.objective <= opts.tol) return {};

    // Phase B: among slack-minimal selections, prefer the best query objective.
    std::vector<double> x = phase_a.x;
    milp::Problem q = p;
    milp::Row cap;
    for (const auto& s : slacks) {
        cap.terms.emplace_back(s.minus, 1.0);
        cap.terms.emplace_back(s.plus, 1.0);
    }
    cap.hi = phase_a.objective + std::max(opts.tol, 1e-9 * std::abs(phase_a.objective));
    cap.name = "slack_cap";
    q.rows.push_back(std::move(cap));
    for (std::size_t j = 0; j < base_vars; ++j) q.cost[j] = model.problem.cost[j];
    for (const auto& s : slacks) {
        q.cost[s.minus] = 0.0;
        q.cost[s.plus] = 0.0;
    }
    milp::MilpResult phase_b = milp::solve_milp(q, mo);
    if (phase_b.has_incumbent) x = phase_b.x;

    // Read violations off the selected bundle itself; slack values carry LP drift.
    auto idx = selected_indices(x, model.tuple_count);
    auto prof = sum_profile(*model.target, idx);
    std::vector<std::size_t> out;
    for (const auto& s : slacks) {
        double v = s.constraint < prof.size() ? prof[s.constraint] : static_cast<double>(idx.size());
        if (!model.bounds.constraint(s.constraint).contains(v, opts.tol)) out.push_back(s.constraint);
    }
    std::sort(out.begin(), out.end());
    return out;
}

Solution execute(const PackageQuery& query, const EngineOptions& opts) {
    IlpModel model = build_ilp(query);
    Solution sol = solve_exact(model, opts);
    if (!sol.optimal()) sol.violated = identify_violations(model, opts);
    return sol;
}

bool is_feasible(const Dataset& target, const ConstraintBounds& bounds, const EngineOptions& opts) {
    PackageQuery q{&target, bounds, Objective::count(Direction::Maximize)};
    IlpModel model = build_ilp(q);
    std::fill(model.problem.cost.begin(), model.problem.cost.end(), 0.0);
    milp::MilpOptions mo;
    mo.node_limit = opts.node_limit;
    mo.feas_tol = opts.tol;
    mo.first_feasible = true;
    return milp::solve_milp(model.problem, mo).has_incumbent;
}

FeasibilityOracle make_feasibility_oracle(const Dataset& target, const Objective& objective,
                                          const EngineOptions& opts) {
    return [&target, objective, opts](const ConstraintBounds& bounds) -> std::vector<std::size_t> {
        PackageQuery q{&target, bounds, objective};
        IlpModel model = build_ilp(q);
        milp::Problem probe = model.problem;
        std::fill(probe.cost.begin(), probe.cost.end(), 0.0);
        milp::MilpOptions mo;
        mo.node_limit = opts.elastic_node_limit;
        mo.feas_tol = opts.tol;
        mo.first_feasible = true;
        if (milp::solve_milp(probe, mo).has_incumbent) return {};
        // Budget exhausted or proven infeasible: the elastic program decides.
        return identify_violations(model, opts);
    };
}

std::string to_lp_format(const IlpModel& model) {
    milp::Problem p = model.problem;
    return milp::to_lp_format(p);
}

}  // namespace bundleforge
