#ifndef BUNDLEFORGE_EVAL_HPP
#define BUNDLEFORGE_EVAL_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bundleforge/core_model.hpp"
#include "bundleforge/pipeline.hpp"

namespace bundleforge {

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct RougeScores {
    PRF r1, r2, rl;
};

struct EvalReport {
    double csr_percent = 0.0;
    double objective_score = 0.0;
    std::optional<RougeScores> rouge;
    double runtime_learn_s = 0.0;
    double runtime_retrieve_s = 0.0;
    int relaxation_count = 0;
};

/// 100 * satisfied / total over every constraint (cardinality included).
double csr(const Bundle& bundle, const Dataset& dataset, const ConstraintBounds& bounds);

/// Top-k by score (descending for maximize, ascending for minimize); ties by id.
Bundle greedy_baseline(const Dataset& target, std::size_t k, const Objective& objective);

/// Uniform k-subset without replacement, deterministic per seed.
Bundle random_baseline(const Dataset& target, std::size_t k, std::uint64_t seed);

/// Lowercase whitespace tokenization.
std::vector<std::string> tokenize(const std::string& text);

PRF rouge_n(const std::vector<std::string>& candidate, const std::vector<std::string>& reference, int n);
PRF rouge_l(const std::vector<std::string>& candidate, const std::vector<std::string>& reference);
RougeScores rouge_all(const std::vector<std::string>& candidate, const std::vector<std::string>& reference);

/// Spearman rank correlation with average ranks for ties. NaN when either side is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);
double median(std::vector<double> v);

// ---------------------------------------------------------------------------
// Synthetic text-snippet fixtures. Each sentence carries K topic scores in
// [0,1] (one dominant topic, sometimes a secondary one), its word count as the
// score, and pseudo-text drawn from per-topic vocabularies as payload.

struct DocumentSpec {
    std::size_t sentences = 60;
    std::size_t topics = 4;
    /// Relative topic prevalence; empty means uniform.
    std::vector<double> topic_weights;
};

Dataset generate_synthetic_document(std::uint64_t seed, const DocumentSpec& spec, const std::string& name);

enum class SamplingStrategy { SingleTopic, MultiTopic, Random };
const char* to_string(SamplingStrategy s);
SamplingStrategy sampling_strategy_from_string(const std::string& s);

/// k sentences of `doc` chosen by the strategy (top-k of one topic, round-robin
/// over randomly drawn topics, or uniform).
Bundle sample_example(const Dataset& doc, std::size_t k, SamplingStrategy strategy, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Experiment runners. Outputs are ordered by query index.

struct RelaxationRecord {
    std::size_t query_id = 0;
    std::size_t example_size = 0;
    bool initially_infeasible = false;
    int relaxation_count = 0;
    bool converged = true;
};

struct RelaxationExperimentConfig {
    std::uint64_t seed = 7;
    std::vector<std::size_t> example_sizes{5, 10, 15, 20, 25, 30, 35, 40, 45};
    std::size_t queries_per_size = 6;
    std::size_t source_documents = 5;
    std::size_t source_sentences = 60;
    std::size_t target_sentences = 60;
    std::size_t topics = 4;
    SamplingStrategy strategy = SamplingStrategy::Random;
    RelaxationParams params;
    EngineOptions engine;
    /// Family override: every target has one topic with zero coverage.
    bool coverage_violation = false;
    /// Family override: examples are drawn from the target itself (always feasible).
    bool examples_from_target = false;
    unsigned threads = 0;  // 0 = hardware concurrency
};

std::vector<RelaxationRecord> run_relaxation_experiment(const RelaxationExperimentConfig& cfg);

struct TimingRecord {
    std::size_t query_id = 0;
    std::size_t example_size = 0;
    SamplingStrategy strategy = SamplingStrategy::Random;
    double learn_s = 0.0;
    double retrieve_s = 0.0;
    double total_s = 0.0;
    int relaxation_count = 0;
};

struct ScalingExperimentConfig {
    std::uint64_t seed = 11;
    std::vector<std::size_t> example_sizes{5, 25, 50, 75, 100};
    std::vector<SamplingStrategy> strategies{SamplingStrategy::SingleTopic, SamplingStrategy::MultiTopic,
                                             SamplingStrategy::Random};
    std::size_t targets_per_setting = 2;
    std::size_t source_documents = 5;
    std::size_t source_sentences = 150;
    std::size_t target_sentences = 150;
    std::size_t topics = 4;
    RelaxationParams params;
    EngineOptions engine;
};

/// Sequential so timings are not perturbed by sibling queries.
std::vector<TimingRecord> run_scaling_experiment(const ScalingExperimentConfig& cfg);

struct SupplierRow {
    std::string method;
    double csr_percent = 0.0;
    double objective = 0.0;
    double runtime_s = 0.0;
};

struct SupplierExperimentConfig {
    std::uint64_t seed = 42;
    std::size_t suppliers = 100;
    std::size_t runs = 5;
    RelaxationParams params;
    EngineOptions engine;
};

struct SupplierExperimentResult {
    std::vector<SupplierRow> rows;            // averaged: Random, Greedy, Engine
    std::vector<double> engine_csr_per_run;   // one entry per run
    std::vector<double> random_objective_per_run;
    std::vector<double> greedy_objective_per_run;
};

SupplierExperimentResult run_supplier_experiment(const SupplierExperimentConfig& cfg);

std::string relaxation_csv(const std::vector<RelaxationRecord>& records);
std::string timing_csv(const std::vector<TimingRecord>& records);
std::string supplier_csv(const SupplierExperimentResult& result);

}  // namespace bundleforge

#endif  // BUNDLEFORGE_EVAL_HPP
