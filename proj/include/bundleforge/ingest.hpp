#ifndef BUNDLEFORGE_INGEST_HPP
#define BUNDLEFORGE_INGEST_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "bundleforge/core_model.hpp"
#include "bundleforge/synth.hpp"

namespace bundleforge {

class ParseError : public Error { using Error::Error; };

// DatasetFile: {"schema":{"features":[...]}, "tuples":[{"id","features","score"?,"payload"?}]}
Dataset dataset_from_json(const nlohmann::json& doc, const std::string& name,
                          DatasetRole role = DatasetRole::Target);
nlohmann::json dataset_to_json(const Dataset& d);

/// Loads a DatasetFile. The dataset is named after the file stem.
Dataset load_dataset(const std::filesystem::path& path, DatasetRole role = DatasetRole::Target);
void save_dataset(const Dataset& d, const std::filesystem::path& path);

struct CsvOptions {
    std::filesystem::path schema_path;  // JSON {"features":[...]} naming the feature columns
    std::string score_column;           // optional
    std::string id_column = "id";
    std::string payload_column;         // optional
};

/// CSV import: header row, feature columns named by the sidecar schema file.
Dataset load_dataset_csv(const std::filesystem::path& path, const CsvOptions& opts,
                         DatasetRole role = DatasetRole::Target);

struct ExampleRef {
    std::string dataset;
    std::vector<std::string> tuple_ids;
};

// ExamplesFile: {"examples":[{"dataset": path-or-id, "tuple_ids":[...]}]}
std::vector<ExampleRef> example_refs_from_json(const nlohmann::json& doc);

/// Resolves example references against loaded sources. A reference may name
/// a dataset by id or by file path (its stem is matched).
std::vector<Bundle> resolve_examples(const std::vector<ExampleRef>& refs,
                                     const std::map<std::string, Dataset>& sources);

std::vector<Bundle> load_examples(const std::filesystem::path& path, const std::map<std::string, Dataset>& sources);

/// Deterministic supplier-selection stand-in: price, availability, balance
/// (min-max scaled to [0,1]) and one-hot region_europe / region_america.
/// score = price + availability + balance.
Dataset generate_synthetic_suppliers(std::uint64_t seed, std::size_t n, const std::string& name = "suppliers");

nlohmann::json to_json(const ConstraintBounds& b, const Schema& schema);
ConstraintBounds bounds_from_json(const nlohmann::json& j, const Schema& schema);
nlohmann::json to_json(const Bundle& b);
nlohmann::json to_json(const Objective& o);
Objective objective_from_json(const nlohmann::json& j);
/// Constraint indices in the trace are rendered as feature names ("cardinality" for K).
nlohmann::json to_json(const RelaxationTrace& t, const Schema& schema);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace bundleforge

#endif  // BUNDLEFORGE_INGEST_HPP
