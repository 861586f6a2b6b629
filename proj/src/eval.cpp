#include "bundleforge/eval.hpp"

#include "bundleforge/ingest.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace bundleforge {

namespace {

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Unbiased integer in [0, n) by rejection; portable across standard libraries.
std::size_t below(std::mt19937_64& rng, std::size_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return static_cast<std::size_t>(v % n);
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t z = seed ^ (a * 0x9E3779B97F4A7C15ULL) ^ (b * 0xC2B2AE3D27D4EB4FULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

PRF make_prf(double overlap, double cand_total, double ref_total) {
    PRF p;
    p.precision = cand_total > 0 ? overlap / cand_total : 0.0;
    p.recall = ref_total > 0 ? overlap / ref_total : 0.0;
    p.f1 = p.precision + p.recall > 0 ? 2 * p.precision * p.recall / (p.precision + p.recall) : 0.0;
    return p;
}

}  // namespace

double csr(const Bundle& bundle, const Dataset& dataset, const ConstraintBounds& bounds) {
    auto idx = resolve_indices(bundle, dataset);
    auto prof = sum_profile(dataset, idx);
    if (prof.size() != bounds.features.size()) throw SchemaError("bounds arity does not match dataset schema");
    const std::size_t total = bounds.constraint_count();
    if (total == 0) return 100.0;
    std::size_t ok = 0;
    for (std::size_t c = 0; c < total; ++c) {
        double v = c < prof.size() ? prof[c] : static_cast<double>(idx.size());
        if (bounds.constraint(c).contains(v, 1e-9)) ++ok;
    }
    return 100.0 * static_cast<double>(ok) / static_cast<double>(total);
}

Bundle greedy_baseline(const Dataset& target, std::size_t k, const Objective& objective) {
    if (k > target.size()) {
        throw ArgumentError("k = " + std::to_string(k) + " exceeds target size " + std::to_string(target.size()));
    }
    std::vector<std::size_t> order(target.size());
    std::iota(order.begin(), order.end(), 0);
    const bool maximize = objective.direction == Direction::Maximize;
    auto score = [&](std::size_t i) {
        return objective.score_source == ScoreSource::ConstantOne ? 1.0 : target.at(i).score;
    };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        double sa = score(a), sb = score(b);
        if (sa != sb) return maximize ? sa > sb : sa < sb;
        return target.at(a).id < target.at(b).id;
    });
    order.resize(k);
    return bundle_from_indices(target, order);
}

Bundle random_baseline(const Dataset& target, std::size_t k, std::uint64_t seed) {
    if (k > target.size()) {
        throw ArgumentError("k = " + std::to_string(k) + " exceeds target size " + std::to_string(target.size()));
    }
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx(target.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + below(rng, idx.size() - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return bundle_from_indices(target, idx);
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    std::string w;
    while (is >> w) {
        std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
        out.push_back(std::move(w));
    }
    return out;
}

PRF rouge_n(const std::vector<std::string>& candidate, const std::vector<std::string>& reference, int n) {
    if (n != 1 && n != 2) throw ArgumentError("ROUGE-N supports n = 1 or 2");
    auto grams = [n](const std::vector<std::string>& toks) {
        std::map<std::string, int> counts;
        if (toks.size() < static_cast<std::size_t>(n)) return counts;
        for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= toks.size(); ++i) {
            std::string g = toks[i];
            for (int k = 1; k < n; ++k) g += '\x1f' + toks[i + static_cast<std::size_t>(k)];
            ++counts[g];
        }
        return counts;
    };
    auto c = grams(candidate), r = grams(reference);
    double overlap = 0, ct = 0, rt = 0;
    for (const auto& [g, cnt] : c) {
        ct += cnt;
        auto it = r.find(g);
        if (it != r.end()) overlap += std::min(cnt, it->second);
    }
    for (const auto& [g, cnt] : r) rt += cnt;
    return make_prf(overlap, ct, rt);
}

PRF rouge_l(const std::vector<std::string>& candidate, const std::vector<std::string>& reference) {
    const std::size_t m = candidate.size(), n = reference.size();
    std::vector<std::size_t> prev(n + 1, 0), cur(n + 1, 0);
    for (std::size_t i = 1; i <= m; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            cur[j] = candidate[i - 1] == reference[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return make_prf(static_cast<double>(prev[n]), static_cast<double>(m), static_cast<double>(n));
}

RougeScores rouge_all(const std::vector<std::string>& candidate, const std::vector<std::string>& reference) {
    return {rouge_n(candidate, reference, 1), rouge_n(candidate, reference, 2), rouge_l(candidate, reference)};
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ArgumentError("spearman: length mismatch");
    if (x.size() < 2) return NAN;
    auto rx = ranks(x), ry = ranks(y);
    const double n = static_cast<double>(x.size());
    double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0 || syy == 0) return NAN;
    return sxy / std::sqrt(sxx * syy);
}

double median(std::vector<double> v) {
    if (v.empty()) return NAN;
    std::sort(v.begin(), v.end());
    std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : (v[h - 1] + v[h]) / 2.0;
}

Dataset generate_synthetic_document(std::uint64_t seed, const DocumentSpec& spec, const std::string& name) {
    if (spec.topics == 0) throw ArgumentError("document needs at least one topic");
    std::mt19937_64 rng(seed);
    std::vector<double> w = spec.topic_weights;
    if (w.empty()) w.assign(spec.topics, 1.0);
    if (w.size() != spec.topics) throw ArgumentError("topic_weights length must equal topics");
    double wsum = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(wsum > 0)) throw ArgumentError("topic_weights must have positive mass");

    auto draw_topic = [&]() {
        double u = unit(rng) * wsum;
        for (std::size_t t = 0; t < w.size(); ++t) {
            if (u < w[t]) return t;
            u -= w[t];
        }
        return w.size() - 1;
    };

    std::vector<std::string> names;
    for (std::size_t t = 0; t < spec.topics; ++t) names.push_back("topic" + std::to_string(t));
    std::vector<Tuple> tuples;
    tuples.reserve(spec.sentences);
    for (std::size_t i = 0; i < spec.sentences; ++i) {
        Tuple t;
        t.id = "s" + std::to_string(i);
        t.features.assign(spec.topics, 0.0);
        std::size_t dom = draw_topic();
        if (w[dom] > 0) t.features[dom] = std::round((0.35 + 0.6 * unit(rng)) * 100) / 100;
        if (spec.topics > 1 && unit(rng) < 0.5) {
            std::size_t sec = draw_topic();
            if (sec != dom && w[sec] > 0) t.features[sec] = std::round((0.05 + 0.25 * unit(rng)) * 100) / 100;
        }
        std::size_t words = 6 + below(rng, 25);
        t.score = static_cast<double>(words);
        std::string text;
        for (std::size_t k = 0; k < words; ++k) {
            std::size_t topic = unit(rng) < 0.6 ? dom : below(rng, spec.topics);
            if (!text.empty()) text += ' ';
            text += "t" + std::to_string(topic) + "w" + std::to_string(below(rng, 40));
        }
        t.payload = std::move(text);
        tuples.push_back(std::move(t));
    }
    return Dataset(name, Schema(std::move(names)), std::move(tuples), DatasetRole::Source);
}

const char* to_string(SamplingStrategy s) {
    switch (s) {
        case SamplingStrategy::SingleTopic: return "single-topic";
        case SamplingStrategy::MultiTopic: return "multi-topic";
        case SamplingStrategy::Random: return "random";
    }
    return "?";
}

SamplingStrategy sampling_strategy_from_string(const std::string& s) {
    if (s == "single-topic") return SamplingStrategy::SingleTopic;
    if (s == "multi-topic") return SamplingStrategy::MultiTopic;
    if (s == "random") return SamplingStrategy::Random;
    throw ArgumentError("unknown sampling strategy '" + s + "'");
}

Bundle sample_example(const Dataset& doc, std::size_t k, SamplingStrategy strategy, std::uint64_t seed) {
    if (k > doc.size()) throw ArgumentError("example size exceeds document length");
    if (strategy == SamplingStrategy::Random) return random_baseline(doc, k, seed);
    std::mt19937_64 rng(seed);
    const std::size_t topics = doc.schema().size();
    // Per-topic ranking, best first; ties by position.
    std::vector<std::vector<std::size_t>> ranked(topics);
    for (std::size_t t = 0; t < topics; ++t) {
        auto& r = ranked[t];
        r.resize(doc.size());
        std::iota(r.begin(), r.end(), 0);
        std::stable_sort(r.begin(), r.end(), [&](std::size_t a, std::size_t b) {
            return doc.at(a).features[t] > doc.at(b).features[t];
        });
    }
    std::vector<bool> taken(doc.size(), false);
    std::vector<std::size_t> chosen;
    std::vector<std::size_t> cursor(topics, 0);
    const std::size_t single = below(rng, topics);
    while (chosen.size() < k) {
        std::size_t t = strategy == SamplingStrategy::SingleTopic ? single : below(rng, topics);
        auto& c = cursor[t];
        while (c < doc.size() && taken[ranked[t][c]]) ++c;
        if (c == doc.size()) continue;  // topic exhausted (only possible in multi-topic mode)
        taken[ranked[t][c]] = true;
        chosen.push_back(ranked[t][c]);
    }
    std::sort(chosen.begin(), chosen.end());
    return bundle_from_indices(doc, chosen);
}

namespace {

struct QueryFixture {
    std::map<std::string, Dataset> sources;
    std::vector<Bundle> examples;
    Dataset target;
};

std::vector<double> shifted_weights(std::mt19937_64& rng, std::size_t topics) {
    std::vector<double> w(topics);
    for (auto& v : w) v = 0.3 + unit(rng);
    return w;
}

QueryFixture make_fixture(std::uint64_t seed, std::size_t n_sources, std::size_t source_sentences,
                          std::size_t target_sentences, std::size_t topics, std::size_t example_size,
                          SamplingStrategy strategy, bool coverage_violation, bool examples_from_target) {
    QueryFixture f;
    std::mt19937_64 rng(seed);
    DocumentSpec tspec{target_sentences, topics, shifted_weights(rng, topics)};
    std::optional<std::size_t> missing;
    if (coverage_violation) {
        missing = below(rng, topics);
        tspec.topic_weights[*missing] = 0.0;
    }
    f.target = generate_synthetic_document(mix(seed, 1), tspec, "target");
    f.target.set_role(DatasetRole::Target);
    for (std::size_t s = 0; s < n_sources; ++s) {
        std::string name = "source" + std::to_string(s);
        if (examples_from_target) {
            f.examples.push_back(sample_example(f.target, std::min(example_size, f.target.size()), strategy,
                                                mix(seed, 3, s)));
            continue;
        }
        DocumentSpec sspec{source_sentences, topics, shifted_weights(rng, topics)};
        Dataset doc = generate_synthetic_document(mix(seed, 2, s), sspec, name);
        Bundle ex = sample_example(doc, std::min(example_size, doc.size()), strategy, mix(seed, 3, s));
        if (missing && feature_profile(ex, doc).values[*missing] == 0.0) {
            // The example must show the topic the target lacks.
            std::size_t best = 0;
            for (std::size_t i = 1; i < doc.size(); ++i) {
                if (doc.at(i).features[*missing] > doc.at(best).features[*missing]) best = i;
            }
            std::vector<std::string> ids = ex.tuple_ids();
            ids.back() = doc.at(best).id;
            ex = Bundle(doc.name(), ids);
        }
        f.examples.push_back(std::move(ex));
        f.sources.emplace(name, std::move(doc));
    }
    if (examples_from_target) {
        Dataset copy = f.target;
        f.sources.emplace("target", std::move(copy));
    }
    return f;
}

}  // namespace

std::vector<RelaxationRecord> run_relaxation_experiment(const RelaxationExperimentConfig& cfg) {
    std::vector<std::pair<std::size_t, std::size_t>> jobs;  // (size, replicate)
    for (std::size_t s : cfg.example_sizes) {
        for (std::size_t r = 0; r < cfg.queries_per_size; ++r) jobs.emplace_back(s, r);
    }
    std::vector<RelaxationRecord> out(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                auto [size, rep] = jobs[i];
                QueryFixture f = make_fixture(mix(cfg.seed, size, rep), cfg.source_documents, cfg.source_sentences,
                                              cfg.target_sentences, cfg.topics, size, cfg.strategy,
                                              cfg.coverage_violation, cfg.examples_from_target);
                auto profiles = example_profiles(f.examples, f.sources);
                ConstraintBounds theta = initial_bounds(profiles);
                auto oracle = make_feasibility_oracle(f.target, Objective::minimize_sum(), cfg.engine);
                RelaxationRecord rec;
                rec.query_id = i;
                rec.example_size = size;
                try {
                    RelaxResult rr = relax_bounds(theta, f.target, cfg.params, oracle);
                    rec.relaxation_count = static_cast<int>(rr.trace.iterations.size());
                } catch (const NonConvergenceError& e) {
                    rec.relaxation_count = static_cast<int>(e.trace().iterations.size());
                    rec.converged = false;
                }
                rec.initially_infeasible = rec.relaxation_count > 0 || !rec.converged;
                out[i] = rec;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    unsigned n = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    n = std::min<unsigned>(n, static_cast<unsigned>(std::max<std::size_t>(1, jobs.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

std::vector<TimingRecord> run_scaling_experiment(const ScalingExperimentConfig& cfg) {
    std::vector<TimingRecord> out;
    std::size_t qid = 0;
    for (std::size_t size : cfg.example_sizes) {
        for (SamplingStrategy strat : cfg.strategies) {
            for (std::size_t r = 0; r < cfg.targets_per_setting; ++r) {
                QueryFixture f = make_fixture(mix(cfg.seed, size, r * 8 + static_cast<std::size_t>(strat)),
                                              cfg.source_documents, cfg.source_sentences, cfg.target_sentences,
                                              cfg.topics, size, strat, false, false);
                QueryRequest req;
                req.examples = f.examples;
                req.sources = &f.sources;
                req.target = &f.target;
                req.objective = Objective::minimize_sum();
                req.params = cfg.params;
                req.engine = cfg.engine;
                QueryOutcome o = run_query(req);
                TimingRecord rec;
                rec.query_id = qid++;
                rec.example_size = size;
                rec.strategy = strat;
                rec.learn_s = o.learn_seconds;
                rec.retrieve_s = o.retrieve_seconds;
                rec.total_s = o.learn_seconds + o.retrieve_seconds;
                rec.relaxation_count = static_cast<int>(o.trace.iterations.size());
                out.push_back(rec);
            }
        }
    }
    return out;
}

SupplierExperimentResult run_supplier_experiment(const SupplierExperimentConfig& cfg) {
    SupplierExperimentResult res;
    const Objective obj = Objective::maximize_sum();
    double csr_r = 0, csr_g = 0, csr_e = 0, obj_r = 0, obj_g = 0, obj_e = 0, t_r = 0, t_g = 0, t_e = 0;
    using clock = std::chrono::steady_clock;
    for (std::size_t run = 0; run < cfg.runs; ++run) {
        std::uint64_t s = mix(cfg.seed, run);
        Dataset target = generate_synthetic_suppliers(s, cfg.suppliers, "target_country");
        std::map<std::string, Dataset> sources;
        std::vector<Bundle> examples;
        // Conservative (financially stable), price-focused, balanced strategies.
        const std::array<std::pair<std::size_t, std::size_t>, 3> plans{{{2, 8}, {0, 10}, {99, 9}}};
        for (std::size_t e = 0; e < plans.size(); ++e) {
            std::string name = "country" + std::to_string(e);
            Dataset src = generate_synthetic_suppliers(mix(s, 100 + e), cfg.suppliers, name);
            src.set_role(DatasetRole::Source);
            auto [feature, k] = plans[e];
            std::vector<std::size_t> order(src.size());
            std::iota(order.begin(), order.end(), 0);
            auto key = [&](std::size_t i) {
                const auto& f = src.at(i).features;
                return feature == 99 ? -std::abs(f[0] - f[1]) - std::abs(f[1] - f[2]) : f[feature];
            };
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
            order.resize(k);
            examples.push_back(bundle_from_indices(src, order));
            sources.emplace(name, std::move(src));
        }
        std::size_t k = 0;
        for (const auto& b : examples) k += b.size();
        k = static_cast<std::size_t>(std::lround(static_cast<double>(k) / static_cast<double>(examples.size())));

        QueryRequest req;
        req.examples = examples;
        req.sources = &sources;
        req.target = &target;
        req.objective = obj;
        req.params = cfg.params;
        req.engine = cfg.engine;
        QueryOutcome o = run_query(req);
        const ConstraintBounds& theta = o.final_bounds;
        double ce = o.solution.optimal() ? csr(*o.solution.bundle, target, theta) : 0.0;
        double oe = o.solution.optimal() ? *o.solution.objective_value : 0.0;
        res.engine_csr_per_run.push_back(ce);
        csr_e += ce;
        obj_e += oe;
        t_e += o.learn_seconds + o.retrieve_seconds;

        auto t0 = clock::now();
        Bundle g = greedy_baseline(target, k, obj);
        t_g += std::chrono::duration<double>(clock::now() - t0).count();
        double og = objective_value(g, target, obj);
        csr_g += csr(g, target, theta);
        obj_g += og;
        res.greedy_objective_per_run.push_back(og);

        t0 = clock::now();
        Bundle r = random_baseline(target, k, mix(s, 7));
        t_r += std::chrono::duration<double>(clock::now() - t0).count();
        double orr = objective_value(r, target, obj);
        csr_r += csr(r, target, theta);
        obj_r += orr;
        res.random_objective_per_run.push_back(orr);
    }
    const double n = static_cast<double>(std::max<std::size_t>(1, cfg.runs));
    res.rows = {{"Random", csr_r / n, obj_r / n, t_r / n},
                {"Greedy", csr_g / n, obj_g / n, t_g / n},
                {"Engine", csr_e / n, obj_e / n, t_e / n}};
    return res;
}

std::string relaxation_csv(const std::vector<RelaxationRecord>& records) {
    std::ostringstream os;
    os << "query_id,example_size,infeasible,count\n";
    for (const auto& r : records) {
        os << r.query_id << ',' << r.example_size << ',' << (r.initially_infeasible ? 1 : 0) << ','
           << r.relaxation_count << '\n';
    }
    return os.str();
}

std::string timing_csv(const std::vector<TimingRecord>& records) {
    std::ostringstream os;
    os.precision(6);
    os << std::fixed;
    os << "example_size,strategy,learn_s,retrieve_s,total_s,relaxations\n";
    for (const auto& r : records) {
        os << r.example_size << ',' << to_string(r.strategy) << ',' << r.learn_s << ',' << r.retrieve_s << ','
           << r.total_s << ',' << r.relaxation_count << '\n';
    }
    return os.str();
}

std::string supplier_csv(const SupplierExperimentResult& result) {
    std::ostringstream os;
    os.precision(4);
    os << std::fixed;
    os << "method,csr_percent,objective,runtime_s\n";
    for (const auto& r : result.rows) {
        os << r.method << ',' << r.csr_percent << ',' << r.objective << ',' << r.runtime_s << '\n';
    }
    return os.str();
}

}  // namespace bundleforge
