#include "bundleforge/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace bundleforge {

const char* to_string(Aggregator a) {
    switch (a) {
        case Aggregator::Sum: return "sum";
        case Aggregator::Avg: return "avg";
        case Aggregator::Count: return "count";
        case Aggregator::Min: return "min";
        case Aggregator::Max: return "max";
    }
    return "?";
}

Aggregator aggregator_from_string(const std::string& s) {
    std::string l = s;
    std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
    if (l == "sum") return Aggregator::Sum;
    if (l == "avg") return Aggregator::Avg;
    if (l == "count") return Aggregator::Count;
    if (l == "min") return Aggregator::Min;
    if (l == "max") return Aggregator::Max;
    throw ArgumentError("unknown aggregator '" + s + "'");
}

Schema::Schema(std::vector<std::string> feature_names) : names_(std::move(feature_names)) {
    if (names_.empty()) throw SchemaError("schema must have at least one feature");
    std::unordered_set<std::string> seen;
    for (const auto& n : names_) {
        if (n.empty()) throw SchemaError("feature names must be non-empty");
        if (!seen.insert(n).second) throw SchemaError("duplicate feature name '" + n + "'");
    }
}

std::optional<std::size_t> Schema::index_of(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names_.begin());
}

Dataset::Dataset(std::string name, Schema schema, std::vector<Tuple> tuples, DatasetRole role)
    : name_(std::move(name)), schema_(std::move(schema)), tuples_(std::move(tuples)), role_(role) {
    const std::size_t k = schema_.size();
    if (k == 0) throw SchemaError("dataset '" + name_ + "' has an empty schema");
    totals_.assign(k, 0.0);
    index_.reserve(tuples_.size());
    for (std::size_t i = 0; i < tuples_.size(); ++i) {
        const Tuple& t = tuples_[i];
        if (t.id.empty()) throw ValidationError("tuple at position " + std::to_string(i) + " has an empty id");
        if (!index_.emplace(t.id, i).second) throw ValidationError("duplicate tuple id '" + t.id + "'");
        if (t.features.size() != k) {
            throw ValidationError("tuple '" + t.id + "' has " + std::to_string(t.features.size()) +
                                  " features, schema expects " + std::to_string(k));
        }
        if (!std::isfinite(t.score)) throw ValidationError("tuple '" + t.id + "' has a non-finite score");
        for (std::size_t j = 0; j < k; ++j) {
            double v = t.features[j];
            if (!std::isfinite(v)) {
                throw ValidationError("tuple '" + t.id + "' feature '" + schema_.name(j) + "' is not finite");
            }
            if (v < 0.0) {
                throw ValidationError("tuple '" + t.id + "' feature '" + schema_.name(j) +
                                      "' is negative; features must be non-negative");
            }
            totals_[j] += v;
        }
    }
}

std::optional<std::size_t> Dataset::index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const Tuple& Dataset::by_id(const std::string& id) const {
    auto idx = index_of(id);
    if (!idx) throw ReferenceError("tuple '" + id + "' not found in dataset '" + name_ + "'");
    return tuples_[*idx];
}

Bundle::Bundle(std::string dataset_id, std::vector<std::string> tuple_ids)
    : dataset_id_(std::move(dataset_id)), ids_(std::move(tuple_ids)) {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

bool Bundle::contains(const std::string& id) const {
    return std::binary_search(ids_.begin(), ids_.end(), id);
}

Interval ConstraintBounds::constraint(std::size_t c) const {
    if (c < features.size()) return features[c];
    if (is_cardinality(c)) {
        double ub = cardinality->ub == std::numeric_limits<long long>::max()
                        ? std::numeric_limits<double>::infinity()
                        : static_cast<double>(cardinality->ub);
        return {static_cast<double>(cardinality->lb), ub};
    }
    throw ArgumentError("constraint index " + std::to_string(c) + " out of range");
}

void ConstraintBounds::set_constraint(std::size_t c, Interval iv) {
    if (c < features.size()) {
        features[c] = iv;
        return;
    }
    if (!is_cardinality(c)) throw ArgumentError("constraint index " + std::to_string(c) + " out of range");
    cardinality->lb = static_cast<long long>(std::floor(iv.lb + 1e-9));
    cardinality->ub = std::isinf(iv.ub) ? std::numeric_limits<long long>::max()
                                        : static_cast<long long>(std::ceil(iv.ub - 1e-9));
}

std::string to_string(const Objective& o) {
    std::string s = o.direction == Direction::Maximize ? "max-" : "min-";
    return s + to_string(o.aggregate);
}

Objective objective_from_string(const std::string& s) {
    auto dash = s.find('-');
    if (dash == std::string::npos) throw ArgumentError("objective must look like 'max-sum', got '" + s + "'");
    std::string dir = s.substr(0, dash);
    Objective o;
    if (dir == "max" || dir == "maximize") o.direction = Direction::Maximize;
    else if (dir == "min" || dir == "minimize") o.direction = Direction::Minimize;
    else throw ArgumentError("unknown objective direction '" + dir + "'");
    o.aggregate = aggregator_from_string(s.substr(dash + 1));
    o.score_source = o.aggregate == Aggregator::Count ? ScoreSource::ConstantOne : ScoreSource::TupleScore;
    return o;
}

void RelaxationParams::validate() const {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw ArgumentError("mu must be a positive real");
    if (tau < 1) throw ArgumentError("tau must be a positive integer");
    if (max_attempts < 1) throw ArgumentError("max_attempts must be a positive integer");
}

std::vector<std::size_t> resolve_indices(const Bundle& bundle, const Dataset& dataset) {
    std::vector<std::size_t> out;
    out.reserve(bundle.size());
    for (const auto& id : bundle.tuple_ids()) {
        auto idx = dataset.index_of(id);
        if (!idx) throw ReferenceError("tuple '" + id + "' not found in dataset '" + dataset.name() + "'");
        out.push_back(*idx);
    }
    std::sort(out.begin(), out.end());
    return out;
}

Bundle bundle_from_indices(const Dataset& dataset, std::span<const std::size_t> indices) {
    std::vector<std::string> ids;
    ids.reserve(indices.size());
    for (auto i : indices) ids.push_back(dataset.at(i).id);
    return Bundle(dataset.name(), std::move(ids));
}

std::vector<double> sum_profile(const Dataset& dataset, std::span<const std::size_t> indices) {
    std::vector<double> v(dataset.schema().size(), 0.0);
    for (auto i : indices) {
        const auto& f = dataset.at(i).features;
        for (std::size_t j = 0; j < v.size(); ++j) v[j] += f[j];
    }
    return v;
}

FeatureProfile feature_profile(const Bundle& bundle, const Dataset& dataset, Aggregator aggregator) {
    auto idx = resolve_indices(bundle, dataset);
    const std::size_t k = dataset.schema().size();
    FeatureProfile p;
    p.aggregator = aggregator;
    switch (aggregator) {
        case Aggregator::Sum:
            p.values = sum_profile(dataset, idx);
            break;
        case Aggregator::Count:
            p.values.assign(k, static_cast<double>(idx.size()));
            break;
        case Aggregator::Avg:
            if (idx.empty()) throw DomainError("AVG profile of an empty bundle is undefined");
            p.values = sum_profile(dataset, idx);
            for (auto& v : p.values) v /= static_cast<double>(idx.size());
            break;
        case Aggregator::Min:
        case Aggregator::Max: {
            if (idx.empty()) throw DomainError("MIN/MAX profile of an empty bundle is undefined");
            p.values = dataset.at(idx.front()).features;
            for (auto i : idx) {
                const auto& f = dataset.at(i).features;
                for (std::size_t j = 0; j < k; ++j) {
                    p.values[j] = aggregator == Aggregator::Min ? std::min(p.values[j], f[j])
                                                                : std::max(p.values[j], f[j]);
                }
            }
            break;
        }
    }
    return p;
}

double objective_value(const Bundle& bundle, const Dataset& dataset, const Objective& objective) {
    auto idx = resolve_indices(bundle, dataset);
    if (objective.aggregate == Aggregator::Count) return static_cast<double>(idx.size());
    auto score = [&](std::size_t i) {
        return objective.score_source == ScoreSource::ConstantOne ? 1.0 : dataset.at(i).score;
    };
    switch (objective.aggregate) {
        case Aggregator::Sum: {
            double s = 0.0;
            for (auto i : idx) s += score(i);
            return s;
        }
        case Aggregator::Avg: {
            if (idx.empty()) throw DomainError("AVG objective of an empty bundle is undefined");
            double s = 0.0;
            for (auto i : idx) s += score(i);
            return s / static_cast<double>(idx.size());
        }
        case Aggregator::Min:
        case Aggregator::Max: {
            if (idx.empty()) throw DomainError("MIN/MAX objective of an empty bundle is undefined");
            double m = score(idx.front());
            for (auto i : idx) m = objective.aggregate == Aggregator::Min ? std::min(m, score(i)) : std::max(m, score(i));
            return m;
        }
        case Aggregator::Count:
            break;
    }
    return 0.0;
}

bool satisfies(const ConstraintBounds& bounds, const Dataset& dataset,
               std::span<const std::size_t> indices, double tol) {
    auto prof = sum_profile(dataset, indices);
    if (bounds.features.size() != prof.size()) throw SchemaError("bounds arity does not match dataset schema");
    for (std::size_t j = 0; j < prof.size(); ++j) {
        if (!bounds.features[j].contains(prof[j], tol)) return false;
    }
    if (bounds.cardinality) {
        auto n = static_cast<long long>(indices.size());
        if (n < bounds.cardinality->lb || n > bounds.cardinality->ub) return false;
    }
    return true;
}

}  // namespace bundleforge
