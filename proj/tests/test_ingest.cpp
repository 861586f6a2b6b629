#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "bundleforge/ingest.hpp"
#include "fixtures.hpp"

using namespace bundleforge;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "bundleforge_ingest_tests";
    fs::create_directories(dir);
    return dir / name;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("dataset files load and round trip") {
    Dataset c = load_dataset(fixtures::data_dir() + "/morpheus/candidates.json");
    CHECK(c.name() == "candidates");
    CHECK(c.size() == 4);
    CHECK(c.by_id("Jones").score == 0.9);
    CHECK(c.schema() == fixtures::faculty_schema());

    fs::path out = scratch("round.json");
    save_dataset(c, out);
    Dataset back = load_dataset(out);
    REQUIRE(back.size() == c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(back.at(i).id == c.at(i).id);
        CHECK(back.at(i).features == c.at(i).features);
        CHECK(back.at(i).score == c.at(i).score);
    }
}

TEST_CASE("csv import with quoted payloads") {
    CsvOptions o;
    o.schema_path = fixtures::data_dir() + "/morpheus/schema.json";
    o.score_column = "reco";
    o.payload_column = "bio";
    Dataset d = load_dataset_csv(fixtures::data_dir() + "/morpheus/candidates.csv", o);
    REQUIRE(d.size() == 4);
    CHECK(*d.by_id("Smith").payload == "Systems, networks");
    CHECK(*d.by_id("Jones").payload == "Databases; said \"hi\"");
    CHECK(*d.by_id("Brown").payload == "Multi\nline");
    CHECK(d.by_id("Brown").features == std::vector<double>{0.5, 0.4, 0.4});
    CHECK(d.by_id("Neo").score == 0.8);
}

TEST_CASE("bad files are rejected") {
    CHECK_THROWS_AS(load_dataset(scratch("missing.json")), ParseError);
    fs::path broken = scratch("broken.json");
    write_file(broken, "{\"schema\": ");
    CHECK_THROWS_AS(load_dataset(broken), ParseError);
    fs::path no_tuples = scratch("no_tuples.json");
    write_file(no_tuples, R"({"schema":{"features":["a"]}})");
    CHECK_THROWS_AS(load_dataset(no_tuples), ParseError);
    fs::path negative = scratch("negative.json");
    write_file(negative, R"({"schema":{"features":["a"]},"tuples":[{"id":"x","features":[-1]}]})");
    CHECK_THROWS_AS(load_dataset(negative), ValidationError);
    fs::path dup = scratch("dup.json");
    write_file(dup, R"({"schema":{"features":["a"]},"tuples":[{"id":"x","features":[1]},{"id":"x","features":[2]}]})");
    CHECK_THROWS_AS(load_dataset(dup), ValidationError);

    CsvOptions o;
    o.schema_path = fixtures::data_dir() + "/morpheus/schema.json";
    fs::path csv = scratch("bad.csv");
    write_file(csv, "id,ai,db,teaching\nA,0.1,zero,0.2\n");
    CHECK_THROWS_AS(load_dataset_csv(csv, o), ParseError);
    write_file(csv, "id,ai,db\nA,0.1,0.2\n");
    CHECK_THROWS_AS(load_dataset_csv(csv, o), ParseError);
    write_file(csv, "id,ai,db,teaching\nA,0.1,0.2,\"0.3\n");
    CHECK_THROWS_AS(load_dataset_csv(csv, o), ParseError);
}

TEST_CASE("examples resolve against sources") {
    std::map<std::string, Dataset> sources;
    for (const char* n : {"univx", "univy"}) {
        Dataset d = load_dataset(fixtures::data_dir() + "/morpheus/" + n + ".json", DatasetRole::Source);
        sources.emplace(d.name(), d);
    }
    auto ex = load_examples(fixtures::data_dir() + "/morpheus/examples.json", sources);
    REQUIRE(ex.size() == 2);
    CHECK(ex[0] == Bundle("univx", {"Trinity", "Cypher"}));

    CHECK_THROWS_AS(resolve_examples({{"nowhere", {"a"}}}, sources), ReferenceError);
    CHECK_THROWS_AS(resolve_examples({{"univx", {"Morpheus"}}}, sources), ReferenceError);
    CHECK_THROWS_AS(example_refs_from_json(nlohmann::json::object()), ParseError);
}

TEST_CASE("bounds json round trip") {
    Schema s = fixtures::faculty_schema();
    ConstraintBounds b;
    b.features = {{0.8, 1.2}, {1.0, INFINITY}, {0.0, 1.3}};
    b.cardinality = CardinalityBounds{2, 2};
    auto j = to_json(b, s);
    CHECK(j["features"][1]["ub"].is_null());
    CHECK(bounds_from_json(j, s) == b);
    j["features"][0]["feature"] = "music";
    CHECK_THROWS_AS(bounds_from_json(j, s), SchemaError);
}

TEST_CASE("objective json") {
    CHECK(to_string(objective_from_json("min-sum")) == "min-sum");
    auto o = objective_from_json({{"direction", "maximize"}, {"aggregate", "count"}});
    CHECK(o.score_source == ScoreSource::ConstantOne);
    CHECK_THROWS_AS(objective_from_json({{"direction", "sideways"}}), ParseError);
}

TEST_CASE("synthetic suppliers are deterministic and scaled") {
    Dataset a = generate_synthetic_suppliers(42, 100), b = generate_synthetic_suppliers(42, 100);
    REQUIRE(a.size() == 100);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.at(i).features == b.at(i).features);
        for (double f : a.at(i).features) {
            CHECK(f >= 0.0);
            CHECK(f <= 1.0);
        }
    }
    CHECK(a.schema().size() == 5);
    CHECK_THROWS_AS(generate_synthetic_suppliers(1, 0), ArgumentError);
}
