#ifndef BUNDLEFORGE_PIPELINE_HPP
#define BUNDLEFORGE_PIPELINE_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bundleforge/core_model.hpp"
#include "bundleforge/pq_engine.hpp"
#include "bundleforge/synth.hpp"

namespace bundleforge {

struct QueryRequest {
    std::vector<Bundle> examples;
    const std::map<std::string, Dataset>* sources = nullptr;
    const Dataset* target = nullptr;
    Objective objective;
    std::optional<CardinalityBounds> cardinality;
    RelaxationParams params;
    EngineOptions engine;
};

struct QueryOutcome {
    ConstraintBounds initial;
    ConstraintBounds final_bounds;
    RelaxationTrace trace;
    bool initially_feasible = true;
    Solution solution;
    double learn_seconds = 0.0;     // profiles + bound synthesis + relaxation
    double retrieve_seconds = 0.0;  // final solve
};

std::vector<FeatureProfile> example_profiles(const std::vector<Bundle>& examples,
                                             const std::map<std::string, Dataset>& sources);

/// Full loop: profiles -> initial bounds -> relaxation -> exact solve.
/// Propagates NonConvergenceError.
QueryOutcome run_query(const QueryRequest& req);

}  // namespace bundleforge

#endif  // BUNDLEFORGE_PIPELINE_HPP
