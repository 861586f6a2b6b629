#include "bundleforge/synth.hpp"

#include <algorithm>
#include <cmath>

namespace bundleforge {

ConstraintBounds initial_bounds(const std::vector<FeatureProfile>& example_profiles) {
    if (example_profiles.empty()) throw ArgumentError("at least one example profile is required");
    const std::size_t k = example_profiles.front().values.size();
    ConstraintBounds theta;
    theta.features.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        theta.features[j] = {example_profiles.front().values[j], example_profiles.front().values[j]};
    }
    for (const auto& p : example_profiles) {
        if (p.values.size() != k) {
            throw SchemaError("example profiles disagree on feature count (" + std::to_string(k) + " vs " +
                              std::to_string(p.values.size()) + ")");
        }
        for (std::size_t j = 0; j < k; ++j) {
            theta.features[j].lb = std::min(theta.features[j].lb, p.values[j]);
            theta.features[j].ub = std::max(theta.features[j].ub, p.values[j]);
        }
    }
    return theta;
}

double step_multiplier(int attempt, const RelaxationParams& params) {
    int level = std::max(1, attempt / params.tau);
    return std::exp(params.mu * static_cast<double>(level));
}

RelaxResult relax_bounds(const ConstraintBounds& theta, const Dataset& target, const RelaxationParams& params,
                         const FeasibilityOracle& oracle, const RelaxOptions& options) {
    params.validate();
    const std::size_t k = target.schema().size();
    if (theta.features.size() != k) {
        throw SchemaError("bounds have " + std::to_string(theta.features.size()) + " entries; target has " +
                          std::to_string(k) + " features");
    }
    if (options.reference && options.reference->constraint_count() != theta.constraint_count()) {
        throw SchemaError("reference bounds arity differs from the bounds being relaxed");
    }
    const auto n = static_cast<double>(target.size());
    auto total_of = [&](std::size_t c) { return c < k ? target.feature_totals()[c] : n; };

    // Widening limits per constraint: [floor, cap].
    std::vector<double> floor_of(theta.constraint_count()), cap_of(theta.constraint_count());
    for (std::size_t c = 0; c < theta.constraint_count(); ++c) {
        floor_of[c] = 0.0;
        cap_of[c] = total_of(c);
        if (options.reference) {
            Interval start = theta.constraint(c);
            Interval ref = options.reference->constraint(c);
            floor_of[c] = std::max(0.0, std::min(start.lb, ref.lb));
            cap_of[c] = std::min(std::max(start.ub, ref.ub), total_of(c));
        }
    }

    RelaxResult out;
    out.bounds = theta;
    out.trace.initial_bounds = theta;
    const auto started = std::chrono::steady_clock::now();
    int attempts = 0;
    while (true) {
        if (options.timeout && std::chrono::steady_clock::now() - started > *options.timeout) {
            out.trace.timed_out = true;
            out.trace.final_bounds = out.bounds;
            return out;
        }
        std::vector<std::size_t> violated = oracle(out.bounds);
        if (violated.empty()) break;
        if (attempts >= params.max_attempts) {
            out.trace.final_bounds = out.bounds;
            throw NonConvergenceError("relaxation did not reach feasibility within " +
                                          std::to_string(params.max_attempts) + " attempts",
                                      out.trace);
        }

        std::vector<std::size_t> targets = violated;
        if (options.relaxable) {
            std::vector<std::size_t> allowed = *options.relaxable;
            std::sort(allowed.begin(), allowed.end());
            targets.clear();
            std::set_intersection(violated.begin(), violated.end(), allowed.begin(), allowed.end(),
                                  std::back_inserter(targets));
            if (targets.empty()) targets = allowed;
        }

        RelaxationStep step;
        step.attempt_index = attempts;
        step.rho = step_multiplier(attempts, params);
        ++attempts;
        for (std::size_t c : targets) {
            Interval iv = out.bounds.constraint(c);
            const double eps = n > 0 ? total_of(c) / n : 0.0;
            if (eps == 0.0) {
                // Zero coverage: only <0, 0> is attainable.
                iv = {0.0, 0.0};
            } else {
                iv.lb = std::max(iv.lb - step.rho * eps, floor_of[c]);
                iv.ub = std::min(iv.ub + step.rho * eps, cap_of[c]);
            }
            out.bounds.set_constraint(c, iv);
            step.relaxed.push_back(c);
        }
        step.bounds_snapshot = out.bounds;
        out.trace.iterations.push_back(std::move(step));
    }
    out.trace.converged = true;
    out.trace.final_bounds = out.bounds;
    return out;
}

}  // namespace bundleforge
