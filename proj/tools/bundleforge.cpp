// bundleforge command-line front end: synth, relax, query, eval, serve.
//
// Exit codes: 0 ok, 2 input error, 3 relaxation did not converge, 4 environment.

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <unistd.h>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "bundleforge/eval.hpp"
#include "bundleforge/ingest.hpp"
#include "bundleforge/pipeline.hpp"
#include "bundleforge/service.hpp"
#include "bundleforge/sliders.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bundleforge;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitEnvironment = 4;

struct EnvironmentError : Error {
    using Error::Error;
};

struct DataFlags {
    std::string examples;
    std::vector<std::string> sources;
    std::string target;
    bool csv = false;
    std::string schema;
    std::string score_column;
    std::string payload_column;
    std::string id_column = "id";
};

struct QueryFlags {
    std::string objective = "max-sum";
    std::string cardinality;
    double mu = RelaxationParams{}.mu;
    int tau = RelaxationParams{}.tau;
    int max_attempts = RelaxationParams{}.max_attempts;
    double alpha = 0.1;
    bool trace = false;
    std::string dump_lp;
};

bool g_pretty = false;

void emit(const json& j) {
    if (g_pretty && ::isatty(STDOUT_FILENO)) std::cout << j.dump(2) << '\n';
    else std::cout << j.dump() << '\n';
}

void add_data_flags(CLI::App* cmd, DataFlags& d, bool with_target) {
    cmd->add_option("--examples", d.examples, "ExamplesFile JSON")->required();
    cmd->add_option("--sources", d.sources, "source DatasetFiles")->required();
    if (with_target) cmd->add_option("--target", d.target, "target DatasetFile")->required();
    cmd->add_flag("--csv", d.csv, "read datasets as CSV (needs --schema)");
    cmd->add_option("--schema", d.schema, "CSV sidecar schema JSON");
    cmd->add_option("--score-column", d.score_column, "CSV score column");
    cmd->add_option("--payload-column", d.payload_column, "CSV payload column");
    cmd->add_option("--id-column", d.id_column, "CSV id column");
}

void add_query_flags(CLI::App* cmd, QueryFlags& q) {
    cmd->add_option("--objective", q.objective, "max-sum, min-sum, max-count, min-count, max-min, min-max");
    cmd->add_option("--cardinality", q.cardinality, "k or lb:ub");
    cmd->add_option("--mu", q.mu, "relaxation step exponent");
    cmd->add_option("--tau", q.tau, "attempts per step boost");
    cmd->add_option("--max-attempts", q.max_attempts, "relaxation attempt budget");
    cmd->add_option("--alpha", q.alpha, "slider width decay");
    cmd->add_flag("--trace", q.trace, "include the relaxation trace");
    cmd->add_option("--dump-lp", q.dump_lp, "write the final ILP in LP format");
}

Dataset load_any(const std::string& path, const DataFlags& d, DatasetRole role) {
    if (!fs::exists(path)) throw ParseError("no such file '" + path + "'");
    if (!d.csv) return load_dataset(path, role);
    if (d.schema.empty()) throw ArgumentError("--csv requires --schema");
    CsvOptions o;
    o.schema_path = d.schema;
    o.score_column = d.score_column;
    o.payload_column = d.payload_column;
    o.id_column = d.id_column;
    return load_dataset_csv(path, o, role);
}

std::map<std::string, Dataset> load_sources(const DataFlags& d) {
    std::map<std::string, Dataset> out;
    for (const auto& p : d.sources) {
        Dataset ds = load_any(p, d, DatasetRole::Source);
        std::string name = ds.name();
        if (!out.emplace(name, std::move(ds)).second) throw ArgumentError("duplicate source dataset '" + name + "'");
    }
    return out;
}

std::vector<Bundle> load_example_bundles(const DataFlags& d, const std::map<std::string, Dataset>& sources) {
    if (!fs::exists(d.examples)) throw ParseError("no such file '" + d.examples + "'");
    return load_examples(d.examples, sources);
}

std::optional<CardinalityBounds> parse_cardinality(const std::string& s) {
    if (s.empty()) return std::nullopt;
    CardinalityBounds cb;
    try {
        auto colon = s.find(':');
        if (colon == std::string::npos) {
            cb.lb = cb.ub = std::stoll(s);
        } else {
            cb.lb = colon == 0 ? 0 : std::stoll(s.substr(0, colon));
            if (colon + 1 < s.size()) cb.ub = std::stoll(s.substr(colon + 1));
        }
    } catch (const std::logic_error&) {
        throw ArgumentError("--cardinality expects k or lb:ub, got '" + s + "'");
    }
    if (cb.lb < 0 || cb.lb > cb.ub) throw ArgumentError("--cardinality needs 0 <= lb <= ub");
    return cb;
}

RelaxationParams params_of(const QueryFlags& q) {
    RelaxationParams p;
    p.mu = q.mu;
    p.tau = q.tau;
    p.max_attempts = q.max_attempts;
    p.validate();
    return p;
}

int cmd_synth(const DataFlags& d) {
    auto sources = load_sources(d);
    auto examples = load_example_bundles(d, sources);
    ConstraintBounds theta = initial_bounds(example_profiles(examples, sources));
    const Schema& schema = sources.begin()->second.schema();
    emit({{"initial_bounds", to_json(theta, schema)}, {"examples", examples.size()}});
    return 0;
}

QueryRequest make_request(const QueryFlags& q, const std::map<std::string, Dataset>& sources,
                          const std::vector<Bundle>& examples, const Dataset& target) {
    QueryRequest req;
    req.examples = examples;
    req.sources = &sources;
    req.target = &target;
    req.objective = objective_from_string(q.objective);
    req.cardinality = parse_cardinality(q.cardinality);
    req.params = params_of(q);
    return req;
}

int non_convergence(const NonConvergenceError& e, const Schema& schema) {
    std::cerr << "error: " << e.what() << '\n';
    emit({{"error", "non_convergence"}, {"message", e.what()}, {"trace", to_json(e.trace(), schema)}});
    return kExitNonConvergence;
}

int cmd_relax(const DataFlags& d, const QueryFlags& q) {
    auto sources = load_sources(d);
    auto examples = load_example_bundles(d, sources);
    Dataset target = load_any(d.target, d, DatasetRole::Target);
    QueryRequest req = make_request(q, sources, examples, target);
    ConstraintBounds theta = initial_bounds(example_profiles(examples, sources));
    theta.cardinality = req.cardinality;
    auto oracle = make_feasibility_oracle(target, req.objective, req.engine);
    try {
        RelaxResult r = relax_bounds(theta, target, req.params, oracle);
        json out = {{"initial_bounds", to_json(theta, target.schema())},
                    {"final_bounds", to_json(r.bounds, target.schema())},
                    {"relaxation_count", r.trace.iterations.size()}};
        if (q.trace) out["trace"] = to_json(r.trace, target.schema());
        emit(out);
    } catch (const NonConvergenceError& e) {
        return non_convergence(e, target.schema());
    }
    return 0;
}

int cmd_query(const DataFlags& d, const QueryFlags& q) {
    auto sources = load_sources(d);
    auto examples = load_example_bundles(d, sources);
    Dataset target = load_any(d.target, d, DatasetRole::Target);
    QueryRequest req = make_request(q, sources, examples, target);
    QueryOutcome o;
    try {
        o = run_query(req);
    } catch (const NonConvergenceError& e) {
        return non_convergence(e, target.schema());
    }
    if (!q.dump_lp.empty()) {
        std::ofstream lp(q.dump_lp);
        if (!lp) throw EnvironmentError("cannot write '" + q.dump_lp + "'");
        lp << to_lp_format(build_ilp(PackageQuery{&target, o.final_bounds, req.objective}));
    }
    json report = {{"initial_bounds", to_json(o.initial, target.schema())},
                   {"final_bounds", to_json(o.final_bounds, target.schema())},
                   {"initially_feasible", o.initially_feasible},
                   {"relaxation_count", o.trace.iterations.size()},
                   {"status", o.solution.optimal() ? "optimal" : "infeasible"},
                   {"proven_optimal", o.solution.stats.proven_optimal},
                   {"gap", o.solution.stats.gap},
                   {"warnings", o.solution.stats.warnings},
                   {"runtime", {{"learn_s", o.learn_seconds},
                                {"retrieve_s", o.retrieve_seconds},
                                {"total_s", o.learn_seconds + o.retrieve_seconds}}}};
    if (o.solution.bundle) {
        report["bundle"] = to_json(*o.solution.bundle);
        report["objective_value"] = o.solution.objective_value ? json(*o.solution.objective_value) : json(nullptr);
        report["csr"] = csr(*o.solution.bundle, target, o.final_bounds);
    } else {
        report["bundle"] = nullptr;
        report["objective_value"] = nullptr;
        report["csr"] = nullptr;
    }
    // Slider ticks for each feature around the final (feasible) bounds.
    json sliders = json::array();
    auto totals = target.feature_totals();
    for (std::size_t j = 0; j < totals.size(); ++j) {
        SliderConfig cfg;
        cfg.mx = totals[j];
        cfg.neutral_ub = std::min(o.final_bounds.features[j].ub, cfg.mx);
        cfg.neutral_lb = std::min(o.final_bounds.features[j].lb, cfg.neutral_ub);
        cfg.alpha = q.alpha;
        json ticks = json::array();
        for (int g : {-100, -50, 0, 50, 100}) {
            Interval iv = bounds_at(g, cfg);
            ticks.push_back({{"gamma", g}, {"label", slider_label(g)}, {"lb", iv.lb}, {"ub", iv.ub}});
        }
        sliders.push_back({{"feature", target.schema().name(j)}, {"mx", cfg.mx}, {"ticks", ticks}});
    }
    report["sliders"] = sliders;
    if (q.trace) report["trace"] = to_json(o.trace, target.schema());
    emit(report);
    return 0;
}

struct EvalFlags {
    std::string suite;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::size_t runs = 5;
    unsigned threads = 0;
};

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream f(p);
    if (!f) throw EnvironmentError("cannot write '" + p.string() + "'");
    f << content;
}

int cmd_eval(const EvalFlags& e) {
    std::error_code ec;
    fs::create_directories(e.out, ec);
    if (ec) throw EnvironmentError("cannot create '" + e.out + "': " + ec.message());
    const fs::path dir(e.out);
    json summary = {{"suite", e.suite}};
    if (e.suite == "suppliers") {
        SupplierExperimentConfig cfg;
        if (e.seed) cfg.seed = *e.seed;
        cfg.runs = e.runs;
        auto r = run_supplier_experiment(cfg);
        write_file(dir / "suppliers.csv", supplier_csv(r));
        json rows = json::array();
        for (const auto& row : r.rows) {
            rows.push_back({{"method", row.method},
                            {"csr_percent", row.csr_percent},
                            {"objective", row.objective},
                            {"runtime_s", row.runtime_s}});
        }
        summary["seed"] = cfg.seed;
        summary["rows"] = rows;
        summary["engine_csr_per_run"] = r.engine_csr_per_run;
        summary["artifact"] = (dir / "suppliers.csv").string();
    } else if (e.suite == "relaxation") {
        RelaxationExperimentConfig cfg;
        if (e.seed) cfg.seed = *e.seed;
        cfg.threads = e.threads;
        auto recs = run_relaxation_experiment(cfg);
        write_file(dir / "relaxation.csv", relaxation_csv(recs));
        std::vector<double> size, count;
        std::size_t infeasible = 0, converged = 0;
        for (const auto& r : recs) {
            size.push_back(static_cast<double>(r.example_size));
            count.push_back(r.relaxation_count);
            if (r.initially_infeasible) {
                ++infeasible;
                if (r.converged) ++converged;
            }
        }
        double rho = spearman(size, count);
        summary["seed"] = cfg.seed;
        summary["queries"] = recs.size();
        summary["initially_infeasible"] = infeasible;
        summary["converged"] = converged;
        summary["spearman_size_vs_count"] = std::isnan(rho) ? json(nullptr) : json(rho);
        summary["artifact"] = (dir / "relaxation.csv").string();
    } else if (e.suite == "scaling") {
        ScalingExperimentConfig cfg;
        if (e.seed) cfg.seed = *e.seed;
        auto recs = run_scaling_experiment(cfg);
        write_file(dir / "scaling.csv", timing_csv(recs));
        double learn = 0, retrieve = 0, worst = 0;
        for (const auto& r : recs) {
            learn += r.learn_s;
            retrieve += r.retrieve_s;
            worst = std::max(worst, r.total_s);
        }
        const double n = static_cast<double>(std::max<std::size_t>(1, recs.size()));
        summary["seed"] = cfg.seed;
        summary["queries"] = recs.size();
        summary["mean_learn_s"] = learn / n;
        summary["mean_retrieve_s"] = retrieve / n;
        summary["max_total_s"] = worst;
        summary["artifact"] = (dir / "scaling.csv").string();
    } else {
        throw ArgumentError("unknown suite '" + e.suite + "' (expected suppliers, relaxation or scaling)");
    }
    write_file(dir / (e.suite + "_summary.json"), summary.dump(2) + "\n");
    emit(summary);
    return 0;
}

struct ServeFlags {
    std::optional<int> port;
    std::string host = "127.0.0.1";
    std::string persist;
    int relax_timeout_ms = 10000;
};

int cmd_serve(const ServeFlags& f) {
    int port = 8080;
    if (f.port) {
        port = *f.port;
    } else if (const char* env = std::getenv("BUNDLEFORGE_PORT")) {
        try {
            port = std::stoi(env);
        } catch (const std::logic_error&) {
            throw ArgumentError(std::string("BUNDLEFORGE_PORT is not a port number: '") + env + "'");
        }
    }
    if (port < 0 || port > 65535) throw ArgumentError("port out of range");

    service::ServiceOptions opts;
    if (!f.persist.empty()) opts.persist_path = fs::path(f.persist);
    opts.relax_timeout = std::chrono::milliseconds(f.relax_timeout_ms);
    service::SessionManager manager(opts);
    manager.load();

    // Block termination signals in every thread; a dedicated thread waits for them.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    httplib::Server server;
    service::register_routes(server, manager);
    int bound = port == 0 ? server.bind_to_any_port(f.host) : (server.bind_to_port(f.host, port) ? port : -1);
    if (bound < 0) throw EnvironmentError("cannot bind " + f.host + ":" + std::to_string(port));

    std::atomic<bool> signaled{false};
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&set, &sig);
        signaled = true;
        server.stop();
    });
    std::cout << json{{"listening", {{"host", f.host}, {"port", bound}}}}.dump() << std::endl;
    server.listen_after_bind();
    // listen can also return on its own; wake the waiter in that case.
    if (!signaled) pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    manager.save();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bundleforge: retrieve bundles from example bundles"};
    app.require_subcommand(1);
    app.add_flag("--pretty", g_pretty, "indent JSON output on a terminal");

    DataFlags synth_d;
    auto* synth = app.add_subcommand("synth", "print initial bounds synthesized from examples");
    add_data_flags(synth, synth_d, false);

    DataFlags relax_d;
    QueryFlags relax_q;
    auto* relax = app.add_subcommand("relax", "synthesize and relax bounds against a target");
    add_data_flags(relax, relax_d, true);
    add_query_flags(relax, relax_q);

    DataFlags query_d;
    QueryFlags query_q;
    auto* query = app.add_subcommand("query", "full pipeline: synthesize, relax, retrieve");
    add_data_flags(query, query_d, true);
    add_query_flags(query, query_q);

    EvalFlags eval_f;
    auto* eval = app.add_subcommand("eval", "run an experiment suite");
    eval->add_option("--suite", eval_f.suite, "suppliers, relaxation or scaling")->required();
    eval->add_option("--seed", eval_f.seed, "suite seed");
    eval->add_option("--out", eval_f.out, "output directory");
    eval->add_option("--runs", eval_f.runs, "supplier runs (Random is averaged over these)");
    eval->add_option("--threads", eval_f.threads, "relaxation suite worker threads (0 = all cores)");

    ServeFlags serve_f;
    auto* serve = app.add_subcommand("serve", "run the HTTP session service");
    serve->add_option("--port", serve_f.port, "listen port (default $BUNDLEFORGE_PORT or 8080; 0 = any)");
    serve->add_option("--host", serve_f.host, "listen address");
    serve->add_option("--persist", serve_f.persist, "JSON file for session persistence");
    serve->add_option("--relax-timeout-ms", serve_f.relax_timeout_ms, "per-request relaxation budget");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    }

    try {
        if (*synth) return cmd_synth(synth_d);
        if (*relax) return cmd_relax(relax_d, relax_q);
        if (*query) return cmd_query(query_d, query_q);
        if (*eval) return cmd_eval(eval_f);
        if (*serve) return cmd_serve(serve_f);
    } catch (const EnvironmentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitEnvironment;
    } catch (const NonConvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNonConvergence;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: malformed JSON: " << e.what() << '\n';
        return kExitInput;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitEnvironment;
    }
    return 0;
}
