#include "fusion/loop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>

#include "fusion/serialize.hpp"

namespace fusion {

using nlohmann::json;

std::string generator_name(GeneratorChoice g) {
    switch (g) {
        case GeneratorChoice::Evolutionary: return "evo";
        case GeneratorChoice::Scripted: return "scripted";
        case GeneratorChoice::Llm: return "llm";
    }
    return "scripted";
}

GeneratorChoice generator_from_name(const std::string& s) {
    if (s == "evo" || s == "evolutionary") return GeneratorChoice::Evolutionary;
    if (s == "scripted") return GeneratorChoice::Scripted;
    if (s == "llm") return GeneratorChoice::Llm;
    throw ConfigError("unknown generator: " + s);
}

void RunConfig::validate() const {
    if (outer_iterations < 1) throw ConfigError("outer_iterations must be >= 1");
    if (top_k < 1) throw ConfigError("top_k must be >= 1");
    if (population < top_k) throw ConfigError("population must be >= top_k");
    if (inner_budget.max_iters < 1) throw ConfigError("inner budget max_iters must be >= 1");
    weights.validate();
    if (setup.kind == StructureKind::MechanisticModel) {
        if (!dataset) throw ConfigError("mechanistic-model case requires a dataset");
        dataset->validate();
    } else {
        if (!library) throw ConfigError("equipment-design case requires an asset library");
        if (!weather) throw ConfigError("equipment-design case requires weather profiles");
        find_profile(*weather, setup.site_id);
    }
}

double evaluate_outer_cost_model(const TwinStructure& s, const ParameterVector& params,
                                 const TimeSeriesDataset& dataset) {
    return validation_mpe(s, params, dataset);
}

DesignEvaluation evaluate_outer_cost_design(const TwinStructure& s, const AssetLibrary& lib,
                                            const WeatherProfile& weather,
                                            const SimOptions& opts) {
    return simulate_design(s.design(), lib, weather, opts);
}

namespace {

std::uint64_t digest_seed(std::uint64_t base, const std::string& digest) {
    std::uint64_t h = base;
    for (unsigned char c : digest) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Deterministic scan + local refinement for design setpoints; the design
// case has at most a couple of continuous knobs and PUE is cheap.
void fit_design_setpoint(const TwinStructure& s, const RunConfig& config,
                         const WeatherProfile& weather, ParameterVector& params,
                         double& best_pue) {
    SimOptions opts;
    opts.utilization = config.setup.utilization;
    opts.compute_target_pflops = config.setup.compute_target_pflops;
    auto pue_at = [&](double sp) {
        opts.chw_setpoint_c = sp;
        const DesignEvaluation ev = simulate_design(s.design(), *config.library, weather, opts);
        return ev.feasible ? ev.pue : std::numeric_limits<double>::infinity();
    };
    ParamEntry& e = params.entries.front();
    double best_sp = e.value;
    best_pue = pue_at(best_sp);
    double span = e.upper - e.lower;
    for (int level = 0; level < 3; ++level) {
        const double step = span / 10.0;
        for (int i = -5; i <= 5; ++i) {
            const double sp = std::clamp(best_sp + i * step, e.lower, e.upper);
            const double p = pue_at(sp);
            if (p < best_pue) {
                best_pue = p;
                best_sp = sp;
            }
        }
        span = 2.0 * span / 10.0;
    }
    e.value = best_sp;
}

}  // namespace

CandidateRecord evaluate_candidate(const TwinStructure& s, const RunConfig& config,
                                   int iteration) {
    CandidateRecord rec;
    rec.structure = s;
    rec.iteration = iteration;
    try {
        if (s.kind == StructureKind::MechanisticModel) {
            Budget budget = config.inner_budget;
            budget.seed = digest_seed(config.seed, s.digest());
            const FitReport fit =
                optimize_parameters(s, *config.dataset, config.weights, budget);
            rec.fitted_params = fit.fitted;
            rec.inner_cost = fit.inner_cost;
            if (fit.failed) {
                rec.failed = true;
                rec.notes = fit.notes;
                return rec;
            }
            rec.outer_cost = evaluate_outer_cost_model(s, fit.fitted, *config.dataset);
            json notes = {{"validation_mpe", rec.outer_cost},
                          {"iterations_used", fit.iterations_used},
                          {"converged", fit.converged}};
            rec.notes = notes.dump();
        } else {
            const WeatherProfile& weather = find_profile(*config.weather, s.design().site_id);
            SimOptions opts;
            opts.utilization = config.setup.utilization;
            opts.compute_target_pflops = config.setup.compute_target_pflops;
            rec.inner_cost = 0.0;
            if (!s.design().params.empty()) {
                rec.fitted_params = initial_params(s, digest_seed(config.seed, s.digest()));
                double fitted_pue = 0.0;
                fit_design_setpoint(s, config, weather, rec.fitted_params, fitted_pue);
                opts.chw_setpoint_c = rec.fitted_params.get("chw_setpoint_c");
                rec.inner_cost = fitted_pue;
            }
            const DesignEvaluation ev =
                evaluate_outer_cost_design(s, *config.library, weather, opts);
            if (!ev.feasible) {
                rec.failed = true;
                json notes = {{"violations", ev.violations}};
                rec.notes = notes.dump();
                return rec;
            }
            rec.outer_cost = ev.pue;
            json notes = {{"pue", ev.pue},
                          {"it_power_w", ev.it_power_w},
                          {"cooling_power_w", ev.cooling_power_w},
                          {"distribution_loss_w", ev.distribution_loss_w},
                          {"chiller_power_w", ev.chiller_power_w},
                          {"fan_pump_power_w", ev.fan_pump_power_w},
                          {"ups_loss_w", ev.ups_loss_w},
                          {"pdu_loss_w", ev.pdu_loss_w},
                          {"compute_pflops", ev.compute_pflops}};
            rec.notes = notes.dump();
        }
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.outer_cost = std::numeric_limits<double>::infinity();
        rec.inner_cost = std::numeric_limits<double>::infinity();
        rec.notes = e.what();
    }
    return rec;
}

namespace {

std::vector<CandidateRecord> evaluate_all(const std::vector<TwinStructure>& proposals,
                                          const RunConfig& config, int iteration) {
    std::vector<CandidateRecord> out(proposals.size());
    const int workers = std::max(1, config.workers);
    if (workers == 1 || proposals.size() <= 1) {
        for (std::size_t i = 0; i < proposals.size(); ++i) {
            out[i] = evaluate_candidate(proposals[i], config, iteration);
        }
        return out;
    }
    std::vector<std::future<void>> futures;
    const std::size_t chunk = (proposals.size() + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(proposals.size(), begin + chunk);
        if (begin >= end) break;
        futures.push_back(std::async(std::launch::async, [&, begin, end] {
            for (std::size_t i = begin; i < end; ++i) {
                out[i] = evaluate_candidate(proposals[i], config, iteration);
            }
        }));
    }
    for (auto& f : futures) f.get();
    return out;
}

json config_echo_json(const RunConfig& config) {
    return {{"case", config.setup.kind == StructureKind::EquipmentDesign ? "equipment_design"
                                                                         : "mechanistic_model"},
            {"generator", generator_name(config.generator)},
            {"outer_iterations", config.outer_iterations},
            {"population", config.population},
            {"top_k", config.top_k},
            {"seed", config.seed},
            {"inner_max_iters", config.inner_budget.max_iters},
            {"inner_tol", config.inner_budget.tol},
            {"loss_weights",
             {{"data", config.weights.data},
              {"phys", config.weights.phys},
              {"boundary", config.weights.boundary}}},
            {"site", config.setup.site_id},
            {"compute_target_pflops", config.setup.compute_target_pflops},
            {"utilization", config.setup.utilization},
            {"workers", config.workers}};
}

}  // namespace

RunTrace run(const RunConfig& config) {
    config.validate();
    RunTrace trace;
    trace.seed = config.seed;
    trace.config_echo = config_echo_json(config);

    std::vector<CandidateRecord> feedback;
    double best_so_far = std::numeric_limits<double>::infinity();

    for (int i = 0; i < config.outer_iterations; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        IterationTrace iter;

        GenerationContext ctx;
        ctx.initial_prompt = config.initial_prompt;
        ctx.feedback = feedback;
        ctx.library = config.library;
        ctx.weather = config.weather;
        ctx.setup = config.setup;
        ctx.iteration = i;
        ctx.seed = config.seed;
        ctx.population = config.population;
        ctx.top_k = config.top_k;

        std::vector<TwinStructure> proposals;
        try {
            switch (config.generator) {
                case GeneratorChoice::Evolutionary:
                    proposals = propose_evolutionary(ctx);
                    break;
                case GeneratorChoice::Scripted:
                    proposals = propose_scripted(ctx);
                    break;
                case GeneratorChoice::Llm: {
                    LlmProposalResult r = propose_llm(ctx, config.endpoint);
                    proposals = std::move(r.structures);
                    iter.degraded_to_scripted = r.degraded_to_scripted;
                    iter.raw_parse_failures = static_cast<int>(r.diagnostics.size());
                    break;
                }
            }
        } catch (const InfeasibleTarget&) {
            throw;
        }

        // The schema gate: nothing unvalidated is ever evaluated.
        std::vector<TwinStructure> valid;
        for (auto& p : proposals) {
            if (proposal_violation(p, ctx)) {
                ++iter.validation_failures;
            } else {
                valid.push_back(std::move(p));
            }
        }
        iter.candidates = evaluate_all(valid, config, i);

        // Elitism: incumbents compete with the new population.
        std::vector<CandidateRecord> pool;
        for (const auto& c : iter.candidates) {
            if (!c.failed) pool.push_back(c);
        }
        pool.insert(pool.end(), feedback.begin(), feedback.end());
        if (pool.empty()) {
            // Every candidate failed; carry the previous feedback forward.
            iter.top_k.clear();
        } else {
            iter.top_k = select_top_k(pool, config.top_k);
            feedback = iter.top_k;
            best_so_far = std::min(best_so_far, feedback.front().outer_cost);
        }
        iter.best_so_far = best_so_far;
        iter.wall_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
        trace.iterations.push_back(std::move(iter));
    }
    if (!feedback.empty()) {
        trace.best = feedback.front();
    } else {
        trace.best.failed = true;
        trace.best.notes = "no candidate survived evaluation";
    }
    return trace;
}

RepeatedAggregate run_repeated(const RunConfig& config, int repeats) {
    if (repeats < 1) {
        throw ConfigError("run_repeated: repeats must be >= 1");
    }
    RepeatedAggregate agg;
    for (int r = 0; r < repeats; ++r) {
        RunConfig cfg = config;
        cfg.seed = config.seed + static_cast<std::uint64_t>(r) * 0x9e3779b97f4a7c15ull;
        agg.traces.push_back(run(cfg));
    }
    const std::size_t n = static_cast<std::size_t>(config.outer_iterations);
    agg.mean_best.assign(n, 0.0);
    agg.std_best.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        for (const auto& t : agg.traces) mean += t.iterations[i].best_so_far;
        mean /= repeats;
        double var = 0.0;
        for (const auto& t : agg.traces) {
            const double d = t.iterations[i].best_so_far - mean;
            var += d * d;
        }
        agg.mean_best[i] = mean;
        agg.std_best[i] = std::sqrt(var / repeats);
    }
    return agg;
}

FitReport baseline_whitebox_expert(const TimeSeriesDataset& dataset, const LossWeights& weights,
                                   const Budget& budget, double ua_lower, double ua_upper) {
    ModelArch a;
    a.family = "coil_counterflow";
    a.params.push_back({"UA", ua_lower, ua_upper, Encoding::Linear});
    TwinStructure s;
    s.kind = StructureKind::MechanisticModel;
    s.provenance = Provenance::Seed;
    s.body = std::move(a);
    return optimize_parameters(s, dataset, weights, budget);
}

namespace {

std::string fmt_cost(double v) {
    if (std::isinf(v)) return "inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

std::string trace_csv(const RunTrace& trace) {
    std::string csv = "iteration,candidate_id,inner_cost,outer_cost,failed\n";
    for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
        for (const auto& c : trace.iterations[i].candidates) {
            csv += std::to_string(i) + "," + c.structure.digest() + "," + fmt_cost(c.inner_cost) +
                   "," + fmt_cost(c.outer_cost) + "," + (c.failed ? "1" : "0") + "\n";
        }
    }
    return csv;
}

void write_trace(const RunTrace& trace, const std::string& out_dir, const std::string& stem) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream csv(out_dir + "/" + stem + ".csv");
        if (!csv) throw IoError("cannot write trace CSV in " + out_dir);
        csv << trace_csv(trace);
    }
    json summary;
    summary["schema"] = trace.schema_version;
    summary["seed"] = trace.seed;
    summary["config"] = trace.config_echo;
    json iters = json::array();
    for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
        const IterationTrace& it = trace.iterations[i];
        iters.push_back({{"iteration", i},
                         {"candidates", it.candidates.size()},
                         {"best_so_far", std::isinf(it.best_so_far) ? json() : json(it.best_so_far)},
                         {"wall_ms", it.wall_ms},
                         {"raw_parse_failures", it.raw_parse_failures},
                         {"validation_failures", it.validation_failures},
                         {"degraded_to_scripted", it.degraded_to_scripted}});
    }
    summary["iterations"] = iters;
    if (!trace.best.failed) {
        summary["best"] = {{"digest", trace.best.structure.digest()},
                           {"outer_cost", trace.best.outer_cost},
                           {"inner_cost", trace.best.inner_cost},
                           {"structure", structure_to_json(trace.best.structure)},
                           {"params", params_to_json(trace.best.fitted_params)},
                           {"notes", trace.best.notes}};
    } else {
        summary["best"] = {{"failed", true}, {"notes", trace.best.notes}};
    }
    save_json_file(out_dir + "/" + stem + "_summary.json", summary);
}

void write_aggregate(const RepeatedAggregate& agg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::ofstream csv(out_dir + "/aggregate.csv");
    if (!csv) throw IoError("cannot write aggregate CSV in " + out_dir);
    csv << "iteration,mean_best,std_best\n";
    for (std::size_t i = 0; i < agg.mean_best.size(); ++i) {
        csv << i << "," << fmt_cost(agg.mean_best[i]) << "," << fmt_cost(agg.std_best[i]) << "\n";
    }
}

}  // namespace fusion
