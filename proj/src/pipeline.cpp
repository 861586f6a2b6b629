#include "bundleforge/pipeline.hpp"

#include <chrono>

namespace bundleforge {

std::vector<FeatureProfile> example_profiles(const std::vector<Bundle>& examples,
                                             const std::map<std::string, Dataset>& sources) {
    std::vector<FeatureProfile> out;
    out.reserve(examples.size());
    for (const auto& e : examples) {
        auto it = sources.find(e.dataset_id());
        if (it == sources.end()) throw ReferenceError("example bundle references unknown dataset '" + e.dataset_id() + "'");
        out.push_back(feature_profile(e, it->second, Aggregator::Sum));
    }
    return out;
}

QueryOutcome run_query(const QueryRequest& req) {
    if (req.target == nullptr || req.sources == nullptr) throw ArgumentError("query request needs a target and sources");
    using clock = std::chrono::steady_clock;
    QueryOutcome out;

    auto t0 = clock::now();
    auto profiles = example_profiles(req.examples, *req.sources);
    if (!profiles.empty() && profiles.front().values.size() != req.target->schema().size()) {
        throw SchemaError("example schema does not match the target schema");
    }
    out.initial = initial_bounds(profiles);
    out.initial.cardinality = req.cardinality;
    auto oracle = make_feasibility_oracle(*req.target, req.objective, req.engine);
    RelaxResult relaxed = relax_bounds(out.initial, *req.target, req.params, oracle);
    out.final_bounds = relaxed.bounds;
    out.trace = std::move(relaxed.trace);
    out.initially_feasible = out.trace.iterations.empty();
    auto t1 = clock::now();

    PackageQuery q{req.target, out.final_bounds, req.objective};
    out.solution = execute(q, req.engine);
    auto t2 = clock::now();
    out.learn_seconds = std::chrono::duration<double>(t1 - t0).count();
    out.retrieve_seconds = std::chrono::duration<double>(t2 - t1).count();
    return out;
}

}  // namespace bundleforge
