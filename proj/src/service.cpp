#include "bundleforge/service.hpp"

#include <fstream>
#include <random>

#include <httplib.h>

#include "bundleforge/eval.hpp"
#include "bundleforge/ingest.hpp"
#include "bundleforge/pipeline.hpp"
#include "bundleforge/sliders.hpp"
#include "bundleforge/synth.hpp"

namespace bundleforge::service {

using nlohmann::json;

json ServiceError::body() const { return {{"code", code_}, {"message", what()}, {"detail", detail_}}; }

namespace {

std::int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

[[noreturn]] void bad_request(const std::string& message, json detail = nullptr) {
    throw ServiceError(400, "invalid_request", message, std::move(detail));
}

const json& require(const json& body, const char* key) {
    if (!body.is_object() || !body.contains(key)) bad_request(std::string("missing field '") + key + "'");
    return body.at(key);
}

double require_number(const json& body, const char* key) {
    const json& v = require(body, key);
    if (!v.is_number()) bad_request(std::string("field '") + key + "' must be a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) bad_request(std::string("field '") + key + "' must be finite");
    return d;
}

struct Event {
    std::string type;  // create | slider | bounds | reset
    std::int64_t timestamp_ms = 0;
    json input;
    ConstraintBounds bounds_after;
    std::vector<SliderState> sliders_after;
    /// Outcome depended on the wall clock (relaxation timeout); replay restores it verbatim.
    bool recorded = false;
};

}  // namespace

struct Session {
    std::string id;
    json request;

    Dataset target;
    std::map<std::string, Dataset> sources;
    std::vector<Bundle> examples;
    Objective objective;
    RelaxationParams params;
    std::optional<CardinalityBounds> cardinality;
    EngineOptions engine;
    std::chrono::milliseconds relax_timeout{10000};
    FeasibilityOracle oracle;

    std::vector<SliderConfig> configs;
    RelaxationTrace creation_trace;
    RelaxationTrace last_trace;
    std::string last_trace_source = "create";

    ConstraintBounds bounds;
    std::vector<SliderState> sliders;
    Solution result;
    std::vector<Event> history;

    std::mutex write_mu;
    mutable std::mutex view_mu;
    std::shared_ptr<const json> view;
};

namespace {

// ---------------------------------------------------------------------------
// JSON views

std::string constraint_name(const Session& s, std::size_t c) {
    return s.bounds.is_cardinality(c) ? "cardinality" : s.target.schema().name(c);
}

json trace_json(const Session& s, const RelaxationTrace& t) { return to_json(t, s.target.schema()); }

json sliders_json(const Session& s) {
    json out = json::array();
    for (std::size_t j = 0; j < s.sliders.size(); ++j) {
        const auto& st = s.sliders[j];
        const auto& cfg = s.configs[j];
        out.push_back({{"feature", s.target.schema().name(j)},
                       {"index", j},
                       {"gamma", st.gamma},
                       {"label", slider_label(st.gamma)},
                       {"lb", st.effective_bounds.lb},
                       {"ub", st.effective_bounds.ub},
                       {"mx", cfg.mx},
                       {"alpha", cfg.alpha},
                       {"neutral", {{"lb", cfg.neutral_lb}, {"ub", cfg.neutral_ub}}},
                       {"snap_fallback", st.snap_fallback}});
    }
    return out;
}

json result_json(const Session& s) {
    const Solution& r = s.result;
    json out = {{"status", r.optimal() ? "optimal" : "infeasible"},
                {"proven_optimal", r.stats.proven_optimal},
                {"gap", r.stats.gap},
                {"nodes", r.stats.nodes},
                {"solve_seconds", r.stats.wall_seconds},
                {"warnings", r.stats.warnings}};
    if (r.bundle) {
        out["bundle"] = to_json(*r.bundle);
        out["objective_value"] = r.objective_value ? json(*r.objective_value) : json(nullptr);
        out["csr"] = csr(*r.bundle, s.target, s.bounds);
        json tuples = json::array();
        for (const auto& id : r.bundle->tuple_ids()) {
            const Tuple& t = s.target.by_id(id);
            json jt = {{"id", t.id}, {"score", t.score}, {"features", t.features}};
            if (t.payload) jt["payload"] = *t.payload;
            tuples.push_back(std::move(jt));
        }
        out["tuples"] = std::move(tuples);
    } else {
        out["bundle"] = nullptr;
        out["objective_value"] = nullptr;
        out["csr"] = nullptr;
        json violated = json::array();
        for (std::size_t c : r.violated) violated.push_back(constraint_name(s, c));
        out["violated"] = violated;
    }
    return out;
}

json event_json(const Session& s, std::size_t index, const Event& e) {
    json gammas = json::array();
    for (const auto& st : e.sliders_after) gammas.push_back(st.gamma);
    return {{"index", index},
            {"type", e.type},
            {"timestamp_ms", e.timestamp_ms},
            {"input", e.input},
            {"bounds", to_json(e.bounds_after, s.target.schema())},
            {"gammas", gammas},
            {"recorded", e.recorded}};
}

json session_json(const Session& s) {
    json history = json::array();
    for (std::size_t i = 0; i < s.history.size(); ++i) history.push_back(event_json(s, i, s.history[i]));
    return {{"session_id", s.id},
            {"target", {{"name", s.target.name()}, {"size", s.target.size()}, {"features", s.target.schema().names()}}},
            {"objective", to_json(s.objective)},
            {"bounds", to_json(s.bounds, s.target.schema())},
            {"sliders", sliders_json(s)},
            {"result", result_json(s)},
            {"relaxation_count", s.creation_trace.iterations.size()},
            {"history_length", s.history.size()},
            {"history", history}};
}

void publish(Session& s) {
    auto v = std::make_shared<const json>(session_json(s));
    std::lock_guard lk(s.view_mu);
    s.view = std::move(v);
}

// ---------------------------------------------------------------------------
// Session construction and mutations (no locking; callers serialize)

Dataset dataset_field(const json& doc, const std::string& fallback_name, DatasetRole role) {
    std::string name = doc.is_object() && doc.contains("name") && doc["name"].is_string()
                           ? doc["name"].get<std::string>()
                           : fallback_name;
    return dataset_from_json(doc, name, role);
}

RelaxationParams params_field(const json& body) {
    RelaxationParams p;
    if (!body.contains("relaxation_params") || body["relaxation_params"].is_null()) return p;
    const json& j = body["relaxation_params"];
    if (!j.is_object()) bad_request("relaxation_params must be an object");
    if (j.contains("mu")) p.mu = require_number(j, "mu");
    if (j.contains("tau")) p.tau = static_cast<int>(require_number(j, "tau"));
    if (j.contains("max_attempts")) p.max_attempts = static_cast<int>(require_number(j, "max_attempts"));
    p.validate();
    return p;
}

std::optional<CardinalityBounds> cardinality_field(const json& body) {
    if (!body.contains("cardinality") || body["cardinality"].is_null()) return std::nullopt;
    const json& j = body["cardinality"];
    CardinalityBounds cb;
    if (j.is_number_integer()) {
        cb.lb = cb.ub = j.get<long long>();
    } else if (j.is_object()) {
        if (j.contains("lb")) cb.lb = j["lb"].get<long long>();
        if (j.contains("ub") && !j["ub"].is_null()) cb.ub = j["ub"].get<long long>();
    } else {
        bad_request("cardinality must be an integer or {lb, ub}");
    }
    if (cb.lb < 0 || cb.lb > cb.ub) bad_request("cardinality bounds must satisfy 0 <= lb <= ub");
    return cb;
}

void solve_current(Session& s) {
    s.result = execute(PackageQuery{&s.target, s.bounds, s.objective}, s.engine);
    if (!s.result.optimal()) {
        throw ServiceError(422, "infeasible", "bounds admit no bundle", {{"bounds", to_json(s.bounds, s.target.schema())}});
    }
}

Event snapshot_event(const Session& s, std::string type, json input) {
    Event e;
    e.type = std::move(type);
    e.timestamp_ms = now_ms();
    e.input = std::move(input);
    e.bounds_after = s.bounds;
    e.sliders_after = s.sliders;
    return e;
}

void build_session(Session& s, const json& body, const ServiceOptions& opts) {
    if (!body.is_object()) bad_request("request body must be a JSON object");
    s.request = body;
    s.engine = opts.engine;
    s.relax_timeout = opts.relax_timeout;
    s.target = dataset_field(require(body, "target_dataset"), "target", DatasetRole::Target);

    const json& src = require(body, "source_datasets");
    if (src.is_object()) {
        for (const auto& [name, doc] : src.items()) {
            s.sources.emplace(name, dataset_field(doc, name, DatasetRole::Source));
        }
    } else if (src.is_array()) {
        std::size_t pos = 0;
        for (const auto& doc : src) {
            Dataset d = dataset_field(doc, "source" + std::to_string(pos++), DatasetRole::Source);
            std::string name = d.name();
            if (!s.sources.emplace(name, std::move(d)).second) bad_request("duplicate source dataset '" + name + "'");
        }
    } else {
        bad_request("source_datasets must be an object or an array");
    }

    s.examples = resolve_examples(example_refs_from_json(json{{"examples", require(body, "examples")}}), s.sources);
    if (s.examples.empty()) bad_request("at least one example bundle is required");
    s.objective = body.contains("objective") ? objective_from_json(body["objective"]) : Objective::maximize_sum();
    s.params = params_field(body);
    s.cardinality = cardinality_field(body);
    double alpha = body.contains("alpha") ? require_number(body, "alpha") : 0.1;

    QueryRequest req;
    req.examples = s.examples;
    req.sources = &s.sources;
    req.target = &s.target;
    req.objective = s.objective;
    req.cardinality = s.cardinality;
    req.params = s.params;
    req.engine = s.engine;
    QueryOutcome out;
    try {
        out = run_query(req);
    } catch (const NonConvergenceError& e) {
        s.creation_trace = e.trace();
        throw ServiceError(422, "non_convergence", e.what(), trace_json(s, e.trace()));
    }
    s.creation_trace = out.trace;
    s.last_trace = out.trace;
    s.bounds = out.final_bounds;
    s.result = out.solution;
    s.oracle = make_feasibility_oracle(s.target, s.objective, s.engine);

    // Neutral position = the feasible bounds; +100 anchors at the feature total.
    const auto totals = s.target.feature_totals();
    for (std::size_t j = 0; j < totals.size(); ++j) {
        SliderConfig cfg;
        cfg.mx = totals[j];
        cfg.neutral_ub = std::min(s.bounds.features[j].ub, cfg.mx);
        cfg.neutral_lb = std::min(s.bounds.features[j].lb, cfg.neutral_ub);
        cfg.alpha = alpha;
        cfg.validate();
        s.configs.push_back(cfg);
        s.sliders.push_back(SliderState{0, bounds_at(0, cfg), false});
    }
    if (!s.result.optimal()) {
        throw ServiceError(422, "infeasible", "relaxed bounds admit no bundle", trace_json(s, s.creation_trace));
    }
    s.history.push_back(snapshot_event(s, "create", nullptr));
}

std::size_t feature_field(const Session& s, const json& body) {
    const json& f = require(body, "feature");
    if (f.is_number_integer()) {
        auto j = f.get<long long>();
        if (j < 0 || static_cast<std::size_t>(j) >= s.target.schema().size()) {
            throw ServiceError(404, "unknown_feature", "no feature with index " + std::to_string(j));
        }
        return static_cast<std::size_t>(j);
    }
    if (!f.is_string()) bad_request("feature must be a name or an index");
    auto j = s.target.schema().index_of(f.get<std::string>());
    if (!j) throw ServiceError(404, "unknown_feature", "no feature named '" + f.get<std::string>() + "'");
    return *j;
}

struct Adjustment {
    std::size_t feature = 0;
    Interval requested;
    bool slider = false;
    int gamma = 0;
};

/// Shared slider / raw-bound path: try the requested interval, re-relax that
/// feature only against the previous feasible bounds, snap, re-solve.
json adjust(Session& s, const Adjustment& a, const char* type, const json& input, bool allow_timeout) {
    const std::size_t j = a.feature;
    const SliderConfig& cfg = s.configs[j];
    ConstraintBounds next = s.bounds;
    next.features[j] = a.requested;

    bool moved = false, reverted = false;
    RelaxationTrace trace;
    trace.initial_bounds = trace.final_bounds = next;
    trace.converged = true;
    if (!s.oracle(next).empty()) {
        RelaxOptions ro;
        ro.reference = s.bounds;
        ro.relaxable = std::vector<std::size_t>{j};
        if (allow_timeout) ro.timeout = s.relax_timeout;
        try {
            RelaxResult rr = relax_bounds(next, s.target, s.params, s.oracle, ro);
            trace = rr.trace;
            if (trace.timed_out) reverted = true;
            else next = rr.bounds;
        } catch (const NonConvergenceError& e) {
            trace = e.trace();
            reverted = true;
        }
        moved = true;
        // Timeout or no convergence: fall back to the previous feasible bounds.
        if (reverted) next = s.bounds;
    }

    SliderState st;
    if (a.slider && !moved) {
        st = {a.gamma, next.features[j], false};
    } else {
        SnapResult sr = snap(next.features[j], cfg);
        st.gamma = sr.gamma;
        st.snap_fallback = !sr.subsumes;
        // A subsuming slider interval is wider than a feasible one, so it stays feasible.
        if (a.slider && sr.subsumes) next.features[j] = bounds_at(sr.gamma, cfg);
        st.effective_bounds = next.features[j];
    }

    ConstraintBounds prev_bounds = s.bounds;
    Solution prev_result = s.result;
    s.bounds = next;
    try {
        solve_current(s);
    } catch (...) {
        s.bounds = std::move(prev_bounds);
        s.result = std::move(prev_result);
        throw;
    }
    s.sliders[j] = st;
    s.last_trace = trace;
    s.last_trace_source = type;

    Event ev = snapshot_event(s, type, input);
    ev.recorded = reverted && trace.timed_out;
    s.history.push_back(std::move(ev));

    json out = {{"bounds", to_json(s.bounds, s.target.schema())},
                {"feature", s.target.schema().name(j)},
                {"snapped_gamma", st.gamma},
                {"snap_fallback", st.snap_fallback},
                {"relaxed", moved},
                {"reverted", reverted},
                {"timed_out", trace.timed_out},
                {"relaxation_count", trace.iterations.size()},
                {"sliders", sliders_json(s)},
                {"result", result_json(s)},
                {"history_length", s.history.size()}};
    if (a.slider) out["requested_gamma"] = a.gamma;
    return out;
}

json apply_slider(Session& s, const json& body, bool allow_timeout = true) {
    std::size_t j = feature_field(s, body);
    const json& g = require(body, "gamma");
    if (!g.is_number()) bad_request("gamma must be an integer");
    double gd = g.get<double>();
    if (gd != std::floor(gd) || gd < kSliderMin || gd > kSliderMax) {
        bad_request("gamma must be an integer in [-100, 100]", {{"gamma", g}});
    }
    Adjustment a;
    a.feature = j;
    a.slider = true;
    a.gamma = static_cast<int>(gd);
    a.requested = bounds_at(a.gamma, s.configs[j]);
    return adjust(s, a, "slider", {{"feature", s.target.schema().name(j)}, {"gamma", a.gamma}}, allow_timeout);
}

json apply_bounds(Session& s, const json& body, bool allow_timeout = true) {
    std::size_t j = feature_field(s, body);
    double lb = require_number(body, "lb"), ub = require_number(body, "ub");
    const double mx = s.configs[j].mx;
    if (lb < 0 || lb > ub || ub > mx + 1e-12) {
        bad_request("bounds must satisfy 0 <= lb <= ub <= " + std::to_string(mx),
                    {{"feature", s.target.schema().name(j)}, {"lb", lb}, {"ub", ub}, {"mx", mx}});
    }
    Adjustment a;
    a.feature = j;
    a.requested = {lb, std::min(ub, mx)};
    return adjust(s, a, "bounds", {{"feature", s.target.schema().name(j)}, {"lb", lb}, {"ub", ub}}, allow_timeout);
}

json apply_reset(Session& s, const json& body) {
    std::size_t index = 0;
    if (body.is_object() && body.contains("index")) {
        const json& v = body["index"];
        if (!v.is_number_integer() || v.get<long long>() < 0) bad_request("index must be a non-negative integer");
        index = static_cast<std::size_t>(v.get<long long>());
    }
    if (index >= s.history.size()) {
        bad_request("history index out of range", {{"index", index}, {"history_length", s.history.size()}});
    }
    const Event target = s.history[index];
    ConstraintBounds prev_bounds = s.bounds;
    s.bounds = target.bounds_after;
    try {
        solve_current(s);
    } catch (...) {
        s.bounds = std::move(prev_bounds);
        throw;
    }
    s.sliders = target.sliders_after;
    s.history.push_back(snapshot_event(s, "reset", {{"index", index}}));
    return {{"bounds", to_json(s.bounds, s.target.schema())},
            {"sliders", sliders_json(s)},
            {"result", result_json(s)},
            {"history_length", s.history.size()}};
}

/// Re-runs creation plus every event after it.
void replay_into(Session& fresh, const json& request, const std::vector<Event>& events, const ServiceOptions& opts) {
    build_session(fresh, request, opts);
    if (!events.empty()) fresh.history.front().timestamp_ms = events.front().timestamp_ms;
    for (std::size_t i = 1; i < events.size(); ++i) {
        const Event& e = events[i];
        if (e.recorded) {
            fresh.bounds = e.bounds_after;
            fresh.sliders = e.sliders_after;
            solve_current(fresh);
            fresh.history.push_back(e);
            continue;
        }
        if (e.type == "slider") apply_slider(fresh, e.input, false);
        else if (e.type == "bounds") apply_bounds(fresh, e.input, false);
        else if (e.type == "reset") apply_reset(fresh, e.input);
        else throw ParseError("unknown history event type '" + e.type + "'");
        fresh.history.back().timestamp_ms = e.timestamp_ms;
    }
}

json event_record(const Session& s, const Event& e) {
    json j = {{"type", e.type}, {"timestamp_ms", e.timestamp_ms}, {"input", e.input}, {"recorded", e.recorded}};
    if (e.recorded) {
        j["bounds"] = to_json(e.bounds_after, s.target.schema());
        json gammas = json::array();
        for (const auto& st : e.sliders_after) {
            gammas.push_back({{"gamma", st.gamma},
                              {"lb", st.effective_bounds.lb},
                              {"ub", st.effective_bounds.ub},
                              {"snap_fallback", st.snap_fallback}});
        }
        j["sliders"] = gammas;
    }
    return j;
}

Event event_from_record(const json& j, const Schema& schema) {
    Event e;
    e.type = j.at("type").get<std::string>();
    e.timestamp_ms = j.value("timestamp_ms", std::int64_t{0});
    e.input = j.value("input", json(nullptr));
    e.recorded = j.value("recorded", false);
    if (e.recorded) {
        e.bounds_after = bounds_from_json(j.at("bounds"), schema);
        for (const auto& st : j.at("sliders")) {
            e.sliders_after.push_back(SliderState{st.at("gamma").get<int>(),
                                                  {st.at("lb").get<double>(), st.at("ub").get<double>()},
                                                  st.at("snap_fallback").get<bool>()});
        }
    }
    return e;
}

std::string new_session_id() {
    static std::mutex mu;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lk(mu);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------

SessionManager::SessionManager(ServiceOptions options) : options_(std::move(options)) {}

SessionManager::~SessionManager() = default;

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
    std::shared_lock lk(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ServiceError(404, "not_found", "no session '" + id + "'");
    return it->second;
}

json SessionManager::create(const json& body) {
    auto s = std::make_shared<Session>();
    build_session(*s, body, options_);
    s->id = new_session_id();
    publish(*s);
    {
        std::unique_lock lk(mu_);
        while (sessions_.count(s->id)) s->id = new_session_id();
        sessions_.emplace(s->id, s);
    }
    persist();
    return {{"session_id", s->id},
            {"bounds", to_json(s->bounds, s->target.schema())},
            {"initial_bounds", to_json(s->creation_trace.initial_bounds, s->target.schema())},
            {"sliders", sliders_json(*s)},
            {"result", result_json(*s)},
            {"relaxation_count", s->creation_trace.iterations.size()}};
}

json SessionManager::get(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lk(s->view_mu);
    json v = *s->view;
    v["session_id"] = id;
    return v;
}

json SessionManager::trace(const std::string& id) const {
    auto s = find(id);
    // Holding the writer lock keeps the trace consistent with the published view.
    std::unique_lock lk(s->write_mu, std::try_to_lock);
    if (!lk.owns_lock()) throw ServiceError(409, "busy", "session is being modified");
    json t = trace_json(*s, s->last_trace);
    t["source"] = s->last_trace_source;
    t["creation"] = trace_json(*s, s->creation_trace);
    return t;
}

namespace {

template <class F>
json mutate(const std::shared_ptr<Session>& s, F&& f) {
    std::unique_lock lk(s->write_mu, std::try_to_lock);
    if (!lk.owns_lock()) throw ServiceError(409, "conflict", "another mutation of this session is in progress");
    json out = f(*s);
    publish(*s);
    return out;
}

}  // namespace

json SessionManager::set_slider(const std::string& id, const json& body) {
    json out = mutate(find(id), [&](Session& s) { return apply_slider(s, body); });
    persist();
    return out;
}

json SessionManager::set_bounds(const std::string& id, const json& body) {
    json out = mutate(find(id), [&](Session& s) { return apply_bounds(s, body); });
    persist();
    return out;
}

json SessionManager::reset(const std::string& id, const json& body) {
    json out = mutate(find(id), [&](Session& s) { return apply_reset(s, body); });
    persist();
    return out;
}

json SessionManager::replay_bounds(const std::string& id) const {
    auto s = find(id);
    json request;
    std::vector<Event> events;
    {
        std::unique_lock lk(s->write_mu);
        request = s->request;
        events = s->history;
    }
    Session fresh;
    replay_into(fresh, request, events, options_);
    return to_json(fresh.bounds, fresh.target.schema());
}

std::vector<std::string> SessionManager::ids() const {
    std::shared_lock lk(mu_);
    std::vector<std::string> out;
    for (const auto& [id, s] : sessions_) out.push_back(id);
    return out;
}

std::size_t SessionManager::size() const {
    std::shared_lock lk(mu_);
    return sessions_.size();
}

void SessionManager::persist() const {
    if (options_.persist_path) save();
}

void SessionManager::save() const {
    if (!options_.persist_path) return;
    json doc = {{"sessions", json::array()}};
    for (const auto& id : ids()) {
        auto s = find(id);
        std::unique_lock lk(s->write_mu);
        json events = json::array();
        for (const auto& e : s->history) events.push_back(event_record(*s, e));
        doc["sessions"].push_back({{"id", s->id}, {"request", s->request}, {"events", events}});
    }
    std::lock_guard lk(persist_mu_);
    auto tmp = *options_.persist_path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out << doc.dump() << '\n';
    }
    std::filesystem::rename(tmp, *options_.persist_path);
}

void SessionManager::load() {
    if (!options_.persist_path || !std::filesystem::exists(*options_.persist_path)) return;
    json doc = read_json_file(*options_.persist_path);
    for (const auto& rec : doc.at("sessions")) {
        auto s = std::make_shared<Session>();
        Dataset probe = dataset_field(rec.at("request").at("target_dataset"), "target", DatasetRole::Target);
        std::vector<Event> events;
        for (const auto& e : rec.at("events")) events.push_back(event_from_record(e, probe.schema()));
        replay_into(*s, rec.at("request"), events, options_);
        s->id = rec.at("id").get<std::string>();
        publish(*s);
        std::unique_lock lk(mu_);
        sessions_[s->id] = s;
    }
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <class F>
void guarded(httplib::Response& res, F&& f) {
    try {
        f();
    } catch (const ServiceError& e) {
        send_json(res, e.status(), e.body());
    } catch (const json::exception& e) {
        send_json(res, 400, ServiceError(400, "invalid_json", e.what()).body());
    } catch (const NonConvergenceError& e) {
        send_json(res, 422, ServiceError(422, "non_convergence", e.what()).body());
    } catch (const SearchLimitError& e) {
        send_json(res, 422, ServiceError(422, "search_limit", e.what()).body());
    } catch (const CapacityError& e) {
        send_json(res, 422, ServiceError(422, "capacity", e.what()).body());
    } catch (const ReferenceError& e) {
        send_json(res, 400, ServiceError(400, "unknown_reference", e.what()).body());
    } catch (const Error& e) {
        send_json(res, 400, ServiceError(400, "invalid_request", e.what()).body());
    } catch (const std::exception& e) {
        send_json(res, 500, ServiceError(500, "internal", e.what()).body());
    }
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw ServiceError(400, "invalid_json", "request body is not valid JSON", {{"parser", e.what()}});
    }
}

}  // namespace

void register_routes(httplib::Server& server, SessionManager& m) {
    server.Get("/healthz", [&m](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"status", "ok"}, {"sessions", m.size()}});
    });
    server.Get("/sessions", [&m](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"sessions", m.ids()}});
    });
    server.Post("/sessions", [&m](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 201, m.create(parse_body(req))); });
    });
    server.Get(R"(/sessions/([^/]+))", [&m](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, m.get(req.matches[1])); });
    });
    server.Get(R"(/sessions/([^/]+)/trace)", [&m](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, m.trace(req.matches[1])); });
    });
    server.Post(R"(/sessions/([^/]+)/sliders)", [&m](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, m.set_slider(req.matches[1], parse_body(req))); });
    });
    server.Post(R"(/sessions/([^/]+)/bounds)", [&m](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, m.set_bounds(req.matches[1], parse_body(req))); });
    });
    server.Post(R"(/sessions/([^/]+)/reset)", [&m](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, m.reset(req.matches[1], parse_body(req))); });
    });
    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
        if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
        send_json(res, res.status,
                  ServiceError(res.status, res.status == 404 ? "not_found" : "http_error",
                               res.status == 404 ? "no route for " + req.method + " " + req.path : "request failed")
                      .body());
        return httplib::Server::HandlerResponse::Handled;
    });
}

}  // namespace bundleforge::service
