#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fusion/assets.hpp"
#include "fusion/types.hpp"

namespace fusion {

struct CaseSetup {
    StructureKind kind = StructureKind::EquipmentDesign;
    // Equipment-selection case
    std::string site_id;
    double compute_target_pflops = 50.0;
    double utilization = 0.8;
    HallGrid grid{40, 40, 1, true};
    bool fit_setpoint = false;
    // Mechanistic-model case
    double nominal_water_flow = 2.0;
    double nominal_air_flow = 3.0;
    double ua_lower = 100.0;
    double ua_upper = 30000.0;
};

struct GenerationContext {
    std::string initial_prompt;
    std::vector<CandidateRecord> feedback;  // top-K, sorted ascending by outer cost
    const AssetLibrary* library = nullptr;
    const std::vector<WeatherProfile>* weather = nullptr;
    CaseSetup setup;
    int iteration = 0;
    std::uint64_t seed = 0;
    int population = 10;
    int top_k = 5;
};

// The schema gate every generator output must pass before leaving the
// module. Returns a diagnostic for invalid structures, nullopt when valid.
std::optional<std::string> proposal_violation(const TwinStructure& s,
                                              const GenerationContext& ctx);

// Mutation + selection over designs/architectures; invalid mutations are
// resampled up to 20 times, then the parent is cloned.
std::vector<TwinStructure> propose_evolutionary(const GenerationContext& ctx);

// Deterministic knowledge-seeded heuristic, the offline stand-in for the
// LLM path. Throws InfeasibleTarget when the library cannot reach the
// compute target.
std::vector<TwinStructure> propose_scripted(const GenerationContext& ctx);

// Verbatim schema reference embedded in prompts and docs.
const std::string& schema_reference();

std::string build_prompt(const GenerationContext& ctx);

struct LlmEndpointConfig {
    std::string base_url;  // e.g. http://127.0.0.1:8080
    std::string model = "o3-mini";
    std::string api_key_env = "FUSION_LLM_API_KEY";
    double temperature = 0.2;
    int max_tokens = 4096;
    int timeout_s = 60;
    int retries = 2;
    bool fallback_to_scripted = false;
};

struct LlmProposalResult {
    std::vector<TwinStructure> structures;
    int retries_used = 0;
    bool degraded_to_scripted = false;
    std::vector<std::string> diagnostics;
};

LlmProposalResult propose_llm(const GenerationContext& ctx, const LlmEndpointConfig& endpoint);

std::vector<CandidateRecord> select_top_k(std::vector<CandidateRecord> evaluated, int k);

}  // namespace fusion
