#ifndef BUNDLEFORGE_SYNTH_HPP
#define BUNDLEFORGE_SYNTH_HPP

#include <chrono>
#include <optional>
#include <vector>

#include "bundleforge/core_model.hpp"
#include "bundleforge/pq_engine.hpp"

namespace bundleforge {

struct RelaxationStep {
    int attempt_index = 0;
    double rho = 0.0;
    std::vector<std::size_t> relaxed;  // constraint indices changed in this step
    ConstraintBounds bounds_snapshot;  // bounds after the step
};

struct RelaxationTrace {
    std::vector<RelaxationStep> iterations;
    ConstraintBounds initial_bounds;
    ConstraintBounds final_bounds;
    bool converged = false;
    bool timed_out = false;
};

class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, RelaxationTrace trace)
        : Error(what), trace_(std::move(trace)) {}
    const RelaxationTrace& trace() const { return trace_; }

private:
    RelaxationTrace trace_;
};

/// lb_j = min over profiles, ub_j = max over profiles.
ConstraintBounds initial_bounds(const std::vector<FeatureProfile>& example_profiles);

/// exp(mu * max(1, floor(attempt / tau))) for the attempt-th relaxation step.
double step_multiplier(int attempt, const RelaxationParams& params);

struct RelaxOptions {
    /// Previously feasible bounds used as the widening limit (slider re-relaxation).
    std::optional<ConstraintBounds> reference;
    /// When set, only these constraint indices may change; every step widens all of them.
    std::optional<std::vector<std::size_t>> relaxable;
    /// Wall-clock budget; on expiry the partial trace is returned with timed_out set.
    std::optional<std::chrono::steady_clock::duration> timeout;
};

struct RelaxResult {
    ConstraintBounds bounds;
    RelaxationTrace trace;
};

/// Widens violated bounds until the oracle reports feasibility. Throws
/// NonConvergenceError after params.max_attempts steps.
RelaxResult relax_bounds(const ConstraintBounds& theta, const Dataset& target, const RelaxationParams& params,
                         const FeasibilityOracle& oracle, const RelaxOptions& options = {});

}  // namespace bundleforge

#endif  // BUNDLEFORGE_SYNTH_HPP
