#include "bundleforge/ingest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace bundleforge {

using nlohmann::json;

namespace {

double finite_number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ParseError(where + ": expected a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError(where + ": value is not finite");
    return d;
}

double bound_value(const json& v, double if_null) {
    if (v.is_null()) return if_null;
    if (v.is_string()) {
        auto s = v.get<std::string>();
        if (s == "inf" || s == "+inf" || s == "Infinity") return INFINITY;
    }
    if (!v.is_number()) throw ParseError("bound must be a number or null");
    return v.get<double>();
}

json bound_json(double v) {
    if (std::isinf(v)) return nullptr;
    return v;
}

// Minimal RFC-4180 reader: quoted fields may contain commas, quotes and newlines.
std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field += '"';
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && in.peek() == '\n') in.get();
            row.push_back(std::move(field));
            field.clear();
            if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            field += c;
        }
    }
    if (quoted) throw ParseError("CSV: unterminated quoted field");
    if (any) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

Dataset dataset_from_json(const json& doc, const std::string& name, DatasetRole role) {
    if (!doc.is_object()) throw ParseError("dataset document must be a JSON object");
    if (!doc.contains("schema") || !doc["schema"].contains("features")) {
        throw ParseError("dataset document is missing schema.features");
    }
    std::vector<std::string> names;
    for (const auto& f : doc["schema"]["features"]) {
        if (!f.is_string()) throw ParseError("schema.features must be strings");
        names.push_back(f.get<std::string>());
    }
    Schema schema(std::move(names));
    if (!doc.contains("tuples") || !doc["tuples"].is_array()) throw ParseError("dataset document is missing tuples[]");
    std::vector<Tuple> tuples;
    tuples.reserve(doc["tuples"].size());
    std::size_t pos = 0;
    for (const auto& t : doc["tuples"]) {
        std::string where = "tuples[" + std::to_string(pos++) + "]";
        if (!t.is_object()) throw ParseError(where + ": expected an object");
        Tuple tup;
        if (!t.contains("id")) throw ParseError(where + ": missing id");
        tup.id = t["id"].is_string() ? t["id"].get<std::string>() : t["id"].dump();
        where += " (id '" + tup.id + "')";
        if (!t.contains("features") || !t["features"].is_array()) throw ParseError(where + ": missing features[]");
        for (std::size_t j = 0; j < t["features"].size(); ++j) {
            tup.features.push_back(finite_number(t["features"][j], where + ".features[" + std::to_string(j) + "]"));
        }
        if (t.contains("score") && !t["score"].is_null()) tup.score = finite_number(t["score"], where + ".score");
        if (t.contains("payload") && !t["payload"].is_null()) {
            tup.payload = t["payload"].is_string() ? t["payload"].get<std::string>() : t["payload"].dump();
        }
        tuples.push_back(std::move(tup));
    }
    return Dataset(name, std::move(schema), std::move(tuples), role);
}

json dataset_to_json(const Dataset& d) {
    json doc;
    doc["schema"]["features"] = d.schema().names();
    doc["tuples"] = json::array();
    for (const auto& t : d.tuples()) {
        json jt{{"id", t.id}, {"features", t.features}, {"score", t.score}};
        if (t.payload) jt["payload"] = *t.payload;
        doc["tuples"].push_back(std::move(jt));
    }
    return doc;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetRole role) {
    return dataset_from_json(read_json_file(path), path.stem().string(), role);
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << dataset_to_json(d).dump(2) << '\n';
}

Dataset load_dataset_csv(const std::filesystem::path& path, const CsvOptions& opts, DatasetRole role) {
    json schema_doc = read_json_file(opts.schema_path);
    const json& feats = schema_doc.contains("features") ? schema_doc["features"] : schema_doc;
    std::vector<std::string> names = feats.get<std::vector<std::string>>();
    Schema schema(names);

    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    auto rows = parse_csv(in);
    if (rows.empty()) throw ParseError(path.string() + ": missing CSV header");
    const auto& header = rows.front();
    auto col = [&](const std::string& n) -> std::ptrdiff_t {
        auto it = std::find(header.begin(), header.end(), n);
        return it == header.end() ? -1 : it - header.begin();
    };
    std::ptrdiff_t id_col = col(opts.id_column);
    if (id_col < 0) throw ParseError(path.string() + ": no '" + opts.id_column + "' column");
    std::vector<std::ptrdiff_t> fcols;
    for (const auto& n : names) {
        auto c = col(n);
        if (c < 0) throw ParseError(path.string() + ": no column for feature '" + n + "'");
        fcols.push_back(c);
    }
    std::ptrdiff_t score_col = opts.score_column.empty() ? -1 : col(opts.score_column);
    if (!opts.score_column.empty() && score_col < 0) {
        throw ParseError(path.string() + ": no score column '" + opts.score_column + "'");
    }
    std::ptrdiff_t payload_col = opts.payload_column.empty() ? -1 : col(opts.payload_column);

    auto num = [&](const std::string& s, std::size_t line, const std::string& what) {
        try {
            std::size_t used = 0;
            double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ParseError(path.string() + ":" + std::to_string(line) + ": '" + s + "' is not a number (" + what + ")");
        }
    };
    std::vector<Tuple> tuples;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != header.size()) {
            throw ParseError(path.string() + ":" + std::to_string(r + 1) + ": expected " +
                             std::to_string(header.size()) + " fields, got " + std::to_string(row.size()));
        }
        Tuple t;
        t.id = row[static_cast<std::size_t>(id_col)];
        for (std::size_t j = 0; j < fcols.size(); ++j) {
            t.features.push_back(num(row[static_cast<std::size_t>(fcols[j])], r + 1, names[j]));
        }
        if (score_col >= 0) t.score = num(row[static_cast<std::size_t>(score_col)], r + 1, "score");
        if (payload_col >= 0) t.payload = row[static_cast<std::size_t>(payload_col)];
        tuples.push_back(std::move(t));
    }
    return Dataset(path.stem().string(), std::move(schema), std::move(tuples), role);
}

std::vector<ExampleRef> example_refs_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("examples") || !doc["examples"].is_array()) {
        throw ParseError("examples document must contain an examples[] array");
    }
    std::vector<ExampleRef> out;
    std::size_t pos = 0;
    for (const auto& e : doc["examples"]) {
        std::string where = "examples[" + std::to_string(pos++) + "]";
        if (!e.contains("dataset") || !e["dataset"].is_string()) throw ParseError(where + ": missing dataset");
        if (!e.contains("tuple_ids") || !e["tuple_ids"].is_array()) throw ParseError(where + ": missing tuple_ids[]");
        ExampleRef ref;
        ref.dataset = e["dataset"].get<std::string>();
        for (const auto& id : e["tuple_ids"]) ref.tuple_ids.push_back(id.is_string() ? id.get<std::string>() : id.dump());
        out.push_back(std::move(ref));
    }
    return out;
}

std::vector<Bundle> resolve_examples(const std::vector<ExampleRef>& refs, const std::map<std::string, Dataset>& sources) {
    std::vector<Bundle> out;
    const Schema* schema = nullptr;
    for (const auto& ref : refs) {
        auto it = sources.find(ref.dataset);
        if (it == sources.end()) it = sources.find(std::filesystem::path(ref.dataset).stem().string());
        if (it == sources.end()) throw ReferenceError("example references unknown dataset '" + ref.dataset + "'");
        const Dataset& ds = it->second;
        if (schema == nullptr) {
            schema = &ds.schema();
        } else if (!(*schema == ds.schema())) {
            throw SchemaError("example datasets do not share one schema ('" + ds.name() + "' differs)");
        }
        for (const auto& id : ref.tuple_ids) {
            if (!ds.index_of(id)) throw ReferenceError("tuple '" + id + "' not found in dataset '" + ds.name() + "'");
        }
        out.emplace_back(ds.name(), ref.tuple_ids);
    }
    return out;
}

std::vector<Bundle> load_examples(const std::filesystem::path& path, const std::map<std::string, Dataset>& sources) {
    return resolve_examples(example_refs_from_json(read_json_file(path)), sources);
}

Dataset generate_synthetic_suppliers(std::uint64_t seed, std::size_t n, const std::string& name) {
    if (n == 0) throw ArgumentError("supplier count must be >= 1");
    // mt19937_64's output sequence is fixed by the standard; the conversion to
    // [0,1) is done by hand so results are identical across standard libraries.
    std::mt19937_64 rng(seed);
    auto unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

    std::vector<std::array<double, 3>> raw(n);
    std::vector<bool> europe(n);
    for (std::size_t i = 0; i < n; ++i) {
        raw[i][0] = 900.0 + 1100.0 * unit();            // mean supply cost
        raw[i][1] = 1.0 + 9999.0 * unit() * unit();     // available quantity, skewed low
        raw[i][2] = -999.99 + 10998.0 * unit();         // account balance
        europe[i] = unit() < 0.5;
    }
    std::array<double, 3> lo{}, hi{};
    for (std::size_t c = 0; c < 3; ++c) {
        lo[c] = hi[c] = raw[0][c];
        for (const auto& r : raw) {
            lo[c] = std::min(lo[c], r[c]);
            hi[c] = std::max(hi[c], r[c]);
        }
    }
    auto scale = [&](double v, std::size_t c) { return hi[c] > lo[c] ? (v - lo[c]) / (hi[c] - lo[c]) : 0.0; };

    std::vector<Tuple> tuples;
    tuples.reserve(n);
    char buf[32];
    for (std::size_t i = 0; i < n; ++i) {
        Tuple t;
        std::snprintf(buf, sizeof buf, "S%05zu", i + 1);
        t.id = buf;
        // price competitiveness: cheaper is better
        double price = 1.0 - scale(raw[i][0], 0);
        double avail = scale(raw[i][1], 1);
        double bal = scale(raw[i][2], 2);
        t.features = {price, avail, bal, europe[i] ? 1.0 : 0.0, europe[i] ? 0.0 : 1.0};
        t.score = price + avail + bal;
        tuples.push_back(std::move(t));
    }
    Schema schema({"price", "availability", "balance", "region_europe", "region_america"});
    return Dataset(name, std::move(schema), std::move(tuples), DatasetRole::Target);
}

json to_json(const ConstraintBounds& b, const Schema& schema) {
    json j;
    j["features"] = json::array();
    for (std::size_t f = 0; f < b.features.size(); ++f) {
        j["features"].push_back({{"feature", f < schema.size() ? schema.name(f) : std::to_string(f)},
                                 {"lb", bound_json(b.features[f].lb)},
                                 {"ub", bound_json(b.features[f].ub)}});
    }
    if (b.cardinality) {
        json ub = b.cardinality->ub == std::numeric_limits<long long>::max() ? json(nullptr) : json(b.cardinality->ub);
        j["cardinality"] = {{"lb", b.cardinality->lb}, {"ub", ub}};
    } else {
        j["cardinality"] = nullptr;
    }
    return j;
}

json to_json(const RelaxationTrace& t, const Schema& schema) {
    auto name = [&](std::size_t c) { return c < schema.size() ? schema.name(c) : std::string("cardinality"); };
    json steps = json::array();
    for (const auto& step : t.iterations) {
        json relaxed = json::array();
        for (std::size_t c : step.relaxed) relaxed.push_back(name(c));
        steps.push_back({{"attempt_index", step.attempt_index},
                         {"rho", step.rho},
                         {"relaxed", relaxed},
                         {"bounds", to_json(step.bounds_snapshot, schema)}});
    }
    return {{"initial_bounds", to_json(t.initial_bounds, schema)},
            {"final_bounds", to_json(t.final_bounds, schema)},
            {"converged", t.converged},
            {"timed_out", t.timed_out},
            {"relaxation_count", t.iterations.size()},
            {"iterations", steps}};
}

ConstraintBounds bounds_from_json(const json& j, const Schema& schema) {
    ConstraintBounds b;
    b.features.assign(schema.size(), Interval{0.0, INFINITY});
    if (!j.contains("features") || !j["features"].is_array()) throw ParseError("bounds must contain features[]");
    if (j["features"].size() != schema.size()) {
        throw SchemaError("bounds list " + std::to_string(j["features"].size()) + " features; schema has " +
                          std::to_string(schema.size()));
    }
    for (std::size_t f = 0; f < j["features"].size(); ++f) {
        const auto& e = j["features"][f];
        std::size_t idx = f;
        if (e.contains("feature")) {
            auto found = schema.index_of(e["feature"].get<std::string>());
            if (!found) throw SchemaError("unknown feature '" + e["feature"].get<std::string>() + "' in bounds");
            idx = *found;
        }
        b.features[idx] = {bound_value(e.value("lb", json(0.0)), 0.0), bound_value(e.value("ub", json(nullptr)), INFINITY)};
    }
    if (j.contains("cardinality") && !j["cardinality"].is_null()) {
        const auto& c = j["cardinality"];
        CardinalityBounds cb;
        cb.lb = c.value("lb", 0LL);
        if (c.contains("ub") && !c["ub"].is_null()) cb.ub = c["ub"].get<long long>();
        b.cardinality = cb;
    }
    return b;
}

json to_json(const Bundle& b) { return {{"dataset", b.dataset_id()}, {"tuple_ids", b.tuple_ids()}}; }

json to_json(const Objective& o) {
    return {{"direction", o.direction == Direction::Maximize ? "maximize" : "minimize"},
            {"aggregate", to_string(o.aggregate)},
            {"score_source", o.score_source == ScoreSource::ConstantOne ? "constant-one" : "tuple-score"}};
}

Objective objective_from_json(const json& j) {
    if (j.is_string()) return objective_from_string(j.get<std::string>());
    if (!j.is_object()) throw ParseError("objective must be a string like 'max-sum' or an object");
    Objective o;
    std::string dir = j.value("direction", std::string("maximize"));
    if (dir == "maximize" || dir == "max") o.direction = Direction::Maximize;
    else if (dir == "minimize" || dir == "min") o.direction = Direction::Minimize;
    else throw ParseError("unknown objective direction '" + dir + "'");
    o.aggregate = aggregator_from_string(j.value("aggregate", std::string("sum")));
    std::string src = j.value("score_source", std::string("tuple-score"));
    o.score_source = src == "constant-one" || o.aggregate == Aggregator::Count ? ScoreSource::ConstantOne
                                                                               : ScoreSource::TupleScore;
    return o;
}

}  // namespace bundleforge
