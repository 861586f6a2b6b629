// Session request bodies shared by the service tests and the acceptance run.
#ifndef BUNDLEFORGE_TESTS_SERVICE_FIXTURES_HPP
#define BUNDLEFORGE_TESTS_SERVICE_FIXTURES_HPP

#include <string>

#include <json.hpp>

#include "bundleforge/ingest.hpp"
#include "fixtures.hpp"

namespace fixtures {

/// Morpheus hiring session: four candidates, two source universities, pairs only.
inline nlohmann::json morpheus_request() {
    const std::string dir = data_dir() + "/morpheus/";
    nlohmann::json body;
    body["target_dataset"] = bundleforge::read_json_file(dir + "candidates.json");
    body["source_datasets"] = {{"univx", bundleforge::read_json_file(dir + "univx.json")},
                               {"univy", bundleforge::read_json_file(dir + "univy.json")}};
    body["examples"] = bundleforge::read_json_file(dir + "examples.json")["examples"];
    body["objective"] = "max-sum";
    body["cardinality"] = 2;
    return body;
}

/// Three tuples where pushing feature f to its top forces g out of range.
inline nlohmann::json squeeze_request() {
    nlohmann::json schema = {{"features", {"f", "g"}}};
    nlohmann::json body;
    body["target_dataset"] = {{"schema", schema},
                              {"tuples",
                               {{{"id", "a"}, {"features", {0.5, 0.0}}, {"score", 1.0}},
                                {{"id", "b"}, {"features", {0.3, 0.5}}, {"score", 2.0}},
                                {{"id", "c"}, {"features", {0.2, 0.5}}, {"score", 3.0}}}}};
    body["source_datasets"] = {{"src",
                                {{"schema", schema},
                                 {"tuples",
                                  {{{"id", "x"}, {"features", {0.4, 0.0}}}, {{"id", "y"}, {"features", {0.6, 0.1}}}}}}}};
    body["examples"] = {{{"dataset", "src"}, {"tuple_ids", {"x"}}}, {{"dataset", "src"}, {"tuple_ids", {"y"}}}};
    return body;
}

/// Needs several relaxation steps before any bundle fits.
inline nlohmann::json stepwise_request() {
    const std::string dir = data_dir() + "/stepwise/";
    nlohmann::json body;
    body["target_dataset"] = bundleforge::read_json_file(dir + "target.json");
    body["source_datasets"] = {{"source", bundleforge::read_json_file(dir + "source.json")}};
    body["examples"] = bundleforge::read_json_file(dir + "examples.json")["examples"];
    return body;
}

}  // namespace fixtures

#endif  // BUNDLEFORGE_TESTS_SERVICE_FIXTURES_HPP
