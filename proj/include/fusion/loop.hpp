#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fusion/generators.hpp"
#include "fusion/inner_opt.hpp"
#include "fusion/pue_sim.hpp"

namespace fusion {

enum class GeneratorChoice { Evolutionary, Scripted, Llm };

std::string generator_name(GeneratorChoice g);
GeneratorChoice generator_from_name(const std::string& s);

struct RunConfig {
    CaseSetup setup;
    GeneratorChoice generator = GeneratorChoice::Scripted;
    LlmEndpointConfig endpoint;
    int outer_iterations = 5;
    int population = 10;
    int top_k = 5;
    Budget inner_budget;
    LossWeights weights;
    std::uint64_t seed = 42;
    std::string initial_prompt;
    int workers = 1;

    const AssetLibrary* library = nullptr;
    const std::vector<WeatherProfile>* weather = nullptr;
    const TimeSeriesDataset* dataset = nullptr;

    void validate() const;  // ConfigError on breach
};

struct IterationTrace {
    std::vector<CandidateRecord> candidates;
    std::vector<CandidateRecord> top_k;
    double best_so_far = std::numeric_limits<double>::infinity();
    double wall_ms = 0.0;
    int raw_parse_failures = 0;   // LLM replies that failed to parse at all
    int validation_failures = 0;  // structures rejected by the schema gate
    bool degraded_to_scripted = false;
};

struct RunTrace {
    std::vector<IterationTrace> iterations;
    CandidateRecord best;
    nlohmann::json config_echo;
    std::uint64_t seed = 0;
    std::string schema_version = "fusion-twin/trace-v1";
};

// Outer-cost evaluation, dispatched on structure kind.
double evaluate_outer_cost_model(const TwinStructure& s, const ParameterVector& params,
                                 const TimeSeriesDataset& dataset);
DesignEvaluation evaluate_outer_cost_design(const TwinStructure& s, const AssetLibrary& lib,
                                            const WeatherProfile& weather, const SimOptions& opts);

// Evaluate one proposal end to end: inner fit (models, or designs with
// learnable setpoints) followed by the outer cost. Never throws for a bad
// candidate; failures come back as failed records with +inf cost.
CandidateRecord evaluate_candidate(const TwinStructure& s, const RunConfig& config, int iteration);

RunTrace run(const RunConfig& config);

struct RepeatedAggregate {
    std::vector<double> mean_best;  // per outer iteration
    std::vector<double> std_best;
    std::vector<RunTrace> traces;
};

RepeatedAggregate run_repeated(const RunConfig& config, int repeats);

// The hand-written pure-physics coil fit used as the comparison baseline.
FitReport baseline_whitebox_expert(const TimeSeriesDataset& dataset, const LossWeights& weights,
                                   const Budget& budget, double ua_lower, double ua_upper);

// trace.csv is deterministic (no timing columns); wall-clock data lives in
// summary.json only.
void write_trace(const RunTrace& trace, const std::string& out_dir, const std::string& stem);
void write_aggregate(const RepeatedAggregate& agg, const std::string& out_dir);
std::string trace_csv(const RunTrace& trace);

}  // namespace fusion
