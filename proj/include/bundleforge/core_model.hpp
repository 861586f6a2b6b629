#ifndef BUNDLEFORGE_CORE_MODEL_HPP
#define BUNDLEFORGE_CORE_MODEL_HPP

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace bundleforge {

// Error taxonomy shared by every module. All derive from Error so callers
// that only care about "bad input" can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ArgumentError : public Error { using Error::Error; };
class SchemaError : public Error { using Error::Error; };
class ReferenceError : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };
class ValidationError : public Error { using Error::Error; };

enum class Aggregator { Sum, Avg, Count, Min, Max };

const char* to_string(Aggregator a);
Aggregator aggregator_from_string(const std::string& s);

/// Ordered feature space. Index j of every feature vector refers to names()[j].
class Schema {
public:
    Schema() = default;
    explicit Schema(std::vector<std::string> feature_names);

    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    const std::string& name(std::size_t j) const { return names_.at(j); }
    std::optional<std::size_t> index_of(const std::string& name) const;

    bool operator==(const Schema& other) const { return names_ == other.names_; }

private:
    std::vector<std::string> names_;
};

struct Tuple {
    std::string id;
    std::vector<double> features;
    double score = 0.0;
    std::optional<std::string> payload;
};

enum class DatasetRole { Source, Target };

/// A validated collection of tuples over one schema. Construction enforces
/// unique ids, arity, finiteness and non-negative features.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::string name, Schema schema, std::vector<Tuple> tuples,
            DatasetRole role = DatasetRole::Target);

    const std::string& name() const { return name_; }
    const Schema& schema() const { return schema_; }
    const std::vector<Tuple>& tuples() const { return tuples_; }
    std::size_t size() const { return tuples_.size(); }
    DatasetRole role() const { return role_; }
    void set_role(DatasetRole r) { role_ = r; }

    const Tuple& at(std::size_t i) const { return tuples_.at(i); }
    std::optional<std::size_t> index_of(const std::string& id) const;
    const Tuple& by_id(const std::string& id) const;

    /// F_j over the whole dataset (SUM), i.e. the largest attainable profile value.
    const std::vector<double>& feature_totals() const { return totals_; }

private:
    std::string name_;
    Schema schema_;
    std::vector<Tuple> tuples_;
    DatasetRole role_ = DatasetRole::Target;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<double> totals_;
};

/// A set of tuple ids drawn from one dataset. Ids are kept sorted and unique.
class Bundle {
public:
    Bundle() = default;
    Bundle(std::string dataset_id, std::vector<std::string> tuple_ids);

    const std::string& dataset_id() const { return dataset_id_; }
    const std::vector<std::string>& tuple_ids() const { return ids_; }
    std::size_t size() const { return ids_.size(); }
    bool empty() const { return ids_.empty(); }
    bool contains(const std::string& id) const;

    bool operator==(const Bundle& o) const {
        return dataset_id_ == o.dataset_id_ && ids_ == o.ids_;
    }

private:
    std::string dataset_id_;
    std::vector<std::string> ids_;
};

struct FeatureProfile {
    std::vector<double> values;
    Aggregator aggregator = Aggregator::Sum;
};

struct Interval {
    double lb = 0.0;
    double ub = std::numeric_limits<double>::infinity();

    double width() const { return ub - lb; }
    bool contains(double v, double tol = 0.0) const { return v >= lb - tol && v <= ub + tol; }
    bool subsumes(const Interval& o, double tol = 0.0) const {
        return lb <= o.lb + tol && ub >= o.ub - tol;
    }
    bool operator==(const Interval& o) const { return lb == o.lb && ub == o.ub; }
};

struct CardinalityBounds {
    long long lb = 0;
    long long ub = std::numeric_limits<long long>::max();
    bool operator==(const CardinalityBounds& o) const { return lb == o.lb && ub == o.ub; }
};

/// Per-feature intervals plus an optional cardinality entry.
///
/// Constraint indices run 0..K-1 for features; when cardinality is present
/// it occupies index K. lb > ub is representable because relaxation can
/// invert an interval transiently.
struct ConstraintBounds {
    std::vector<Interval> features;
    std::optional<CardinalityBounds> cardinality;

    std::size_t feature_count() const { return features.size(); }
    std::size_t constraint_count() const { return features.size() + (cardinality ? 1 : 0); }
    bool is_cardinality(std::size_t c) const { return cardinality && c == features.size(); }
    Interval constraint(std::size_t c) const;
    void set_constraint(std::size_t c, Interval iv);

    bool operator==(const ConstraintBounds& o) const {
        return features == o.features && cardinality == o.cardinality;
    }
};

enum class Direction { Maximize, Minimize };
enum class ScoreSource { TupleScore, ConstantOne };

struct Objective {
    Direction direction = Direction::Maximize;
    Aggregator aggregate = Aggregator::Sum;
    ScoreSource score_source = ScoreSource::TupleScore;

    static Objective maximize_sum() { return {}; }
    static Objective minimize_sum() { return {Direction::Minimize, Aggregator::Sum, ScoreSource::TupleScore}; }
    static Objective count(Direction d) { return {d, Aggregator::Count, ScoreSource::ConstantOne}; }
};

std::string to_string(const Objective& o);
/// Parses "max-sum", "min-sum", "max-count", "min-count", "max-min", "max-avg", ...
Objective objective_from_string(const std::string& s);

struct RelaxationParams {
    double mu = 0.5;
    int tau = 10;
    int max_attempts = 1000;

    void validate() const;
};

/// Aggregates features of the bundle's tuples. SUM of an empty bundle is zero;
/// AVG/MIN/MAX of an empty bundle are undefined (DomainError).
FeatureProfile feature_profile(const Bundle& bundle, const Dataset& dataset,
                               Aggregator aggregator = Aggregator::Sum);

/// Profile over tuple indices rather than ids. Used by the solver paths.
std::vector<double> sum_profile(const Dataset& dataset, std::span<const std::size_t> indices);

double objective_value(const Bundle& bundle, const Dataset& dataset, const Objective& objective);

/// Resolves bundle ids to dataset indices, in dataset order.
std::vector<std::size_t> resolve_indices(const Bundle& bundle, const Dataset& dataset);

Bundle bundle_from_indices(const Dataset& dataset, std::span<const std::size_t> indices);

/// True when every constraint of `bounds` holds for the bundle's SUM profile.
bool satisfies(const ConstraintBounds& bounds, const Dataset& dataset,
               std::span<const std::size_t> indices, double tol = 1e-9);

}  // namespace bundleforge

#endif  // BUNDLEFORGE_CORE_MODEL_HPP
