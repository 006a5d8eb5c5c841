#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fusion/datagen.hpp"
#include "fusion/loop.hpp"
#include "fusion/serialize.hpp"

namespace {

using namespace fusion;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitConfig = 2;
constexpr int kExitTransport = 3;

void write_config_echo(const std::string& out_dir, const json& echo) {
    std::filesystem::create_directories(out_dir);
    save_json_file(out_dir + "/config_echo.json", echo);
}

struct GenDataArgs {
    std::string kind = "all";
    std::uint64_t seed = 1;
    std::string out = "out";
    double noise_sigma = 0.1;
    bool perturb = false;
    std::size_t records = 400;
};

int cmd_gen_data(const GenDataArgs& a) {
    write_config_echo(a.out, {{"command", "gen-data"},
                              {"kind", a.kind},
                              {"seed", a.seed},
                              {"noise_sigma", a.noise_sigma},
                              {"perturb", a.perturb},
                              {"records", a.records}});
    if (a.kind == "assets" || a.kind == "all") {
        save_library(a.out + "/assets.json", gen_assets(a.seed));
        std::cout << "wrote " << a.out << "/assets.json\n";
    }
    if (a.kind == "weather" || a.kind == "all") {
        save_weather(a.out + "/weather.json", gen_weather(a.seed));
        std::cout << "wrote " << a.out << "/weather.json\n";
    }
    if (a.kind == "coil" || a.kind == "all") {
        CoilDataConfig cfg;
        cfg.seed = a.seed;
        cfg.noise_sigma_c = a.noise_sigma;
        cfg.perturb_physics = a.perturb;
        cfg.n_records = a.records;
        const CoilData data = gen_coil_dataset(cfg);
        save_json_file(a.out + "/coil_dataset.json", dataset_to_json(data.dataset));
        save_json_file(a.out + "/coil_truth.json", data.truth);
        std::cout << "wrote " << a.out << "/coil_dataset.json (+ coil_truth.json)\n";
    }
    return kExitOk;
}

struct CaseArgs {
    std::string library_path;
    std::string weather_path;
    std::string dataset_path;
    std::string site = "tropical-1";
    std::string out = "out";
    std::string generator = "scripted";
    int repeats = 1;
    std::uint64_t seed = 42;
    int iterations = 5;
    int population = 10;
    int top_k = 5;
    int inner_iters = 500;
    double target_pflops = 50.0;
    double utilization = 0.8;
    int workers = 1;
    bool fit_setpoint = false;
    std::string llm_url;
    std::string llm_model = "o3-mini";
    bool fallback = false;
};

json config_echo_from(const RunConfig& c);

int run_case(const CaseArgs& a, StructureKind kind) {
    RunConfig config;
    config.setup.kind = kind;
    config.generator = generator_from_name(a.generator);
    config.outer_iterations = a.iterations;
    config.population = a.population;
    config.top_k = a.top_k;
    config.inner_budget.max_iters = a.inner_iters;
    config.seed = a.seed;
    config.workers = a.workers;
    config.endpoint.base_url = a.llm_url;
    config.endpoint.model = a.llm_model;
    config.endpoint.fallback_to_scripted = a.fallback;
    if (config.generator == GeneratorChoice::Llm && a.llm_url.empty()) {
        throw ConfigError("--generator llm requires --llm-url");
    }

    AssetLibrary library;
    std::vector<WeatherProfile> weather;
    TimeSeriesDataset dataset;
    if (kind == StructureKind::EquipmentDesign) {
        if (a.library_path.empty() || a.weather_path.empty()) {
            throw ConfigError("case1 requires --library and --weather");
        }
        library = load_library(a.library_path);
        weather = load_weather(a.weather_path);
        config.library = &library;
        config.weather = &weather;
        config.setup.site_id = a.site;
        config.setup.compute_target_pflops = a.target_pflops;
        config.setup.utilization = a.utilization;
        config.setup.fit_setpoint = a.fit_setpoint;
        config.initial_prompt =
            "Design an AIDC at site '" + a.site + "' with a computing performance of " +
            std::to_string(a.target_pflops) +
            " petaFLOPS and an energy-efficient selection of equipment and layout.";
    } else {
        if (a.dataset_path.empty()) {
            throw ConfigError("case2 requires --dataset");
        }
        dataset = dataset_from_json(load_json_file(a.dataset_path));
        config.dataset = &dataset;
        config.initial_prompt =
            "Provide a chilled-water coil model built as counter-flow predicting outlet water "
            "and air temperatures from inlet temperatures and flow rates, exposing tunable "
            "parameters.";
    }

    write_config_echo(a.out, config_echo_from(config));

    const RepeatedAggregate agg = run_repeated(config, a.repeats);
    for (int r = 0; r < a.repeats; ++r) {
        write_trace(agg.traces[r], a.out, "rep" + std::to_string(r));
    }
    write_aggregate(agg, a.out);

    json report;
    report["final_mean_best"] = agg.mean_best.back();
    if (kind == StructureKind::MechanisticModel) {
        // Expert baseline under the identical inner budget, reported next to
        // the fusion result.
        const FitReport expert = baseline_whitebox_expert(
            dataset, config.weights, config.inner_budget, config.setup.ua_lower,
            config.setup.ua_upper);
        double best_mpe = std::numeric_limits<double>::infinity();
        for (const auto& t : agg.traces) {
            if (!t.best.failed) best_mpe = std::min(best_mpe, t.best.outer_cost);
        }
        report["best_validation_mpe"] = best_mpe;
        report["expert_baseline_mpe"] = expert.validation_mpe;
        report["mpe_gap_factor"] = expert.validation_mpe / best_mpe;
        std::cout << "best MPE " << best_mpe << "% vs expert baseline "
                  << expert.validation_mpe << "%\n";
    } else {
        std::cout << "final mean best PUE " << agg.mean_best.back() << "\n";
    }
    save_json_file(a.out + "/report.json", report);
    std::cout << "traces written to " << a.out << "\n";
    return kExitOk;
}

struct CalibrateArgs {
    std::string dataset_path;
    std::string out = "out";
    std::uint64_t seed = 42;
    int inner_iters = 500;
    bool residual = false;
    int hidden = 8;
    bool log_encoding = false;
    bool expert = false;
};

int cmd_calibrate(const CalibrateArgs& a) {
    const TimeSeriesDataset dataset = dataset_from_json(load_json_file(a.dataset_path));
    LossWeights weights;
    Budget budget;
    budget.max_iters = a.inner_iters;
    budget.seed = a.seed;
    write_config_echo(a.out, {{"command", "calibrate"},
                              {"dataset", a.dataset_path},
                              {"seed", a.seed},
                              {"inner_iters", a.inner_iters},
                              {"residual", a.residual},
                              {"hidden", a.hidden},
                              {"log_encoding", a.log_encoding},
                              {"expert", a.expert}});
    FitReport fit;
    if (a.expert) {
        fit = baseline_whitebox_expert(dataset, weights, budget, 100.0, 30000.0);
    } else {
        ModelArch arch;
        arch.family = "coil_counterflow";
        arch.params.push_back(
            {"UA", 100.0, 30000.0, a.log_encoding ? Encoding::Log : Encoding::Linear});
        arch.residual.enabled = a.residual;
        arch.residual.hidden_width = a.hidden;
        TwinStructure s;
        s.kind = StructureKind::MechanisticModel;
        s.body = std::move(arch);
        fit = optimize_parameters(s, dataset, weights, budget);
    }
    json report = {{"inner_cost", fit.inner_cost},
                   {"validation_mpe", fit.failed ? json() : json(fit.validation_mpe)},
                   {"iterations_used", fit.iterations_used},
                   {"converged", fit.converged},
                   {"failed", fit.failed},
                   {"params", params_to_json(fit.fitted)},
                   {"train_loss_trace", fit.train_loss_trace}};
    save_json_file(a.out + "/fit_report.json", report);
    if (fit.failed) {
        std::cerr << "fit failed: " << fit.notes << "\n";
        return kExitValidation;
    }
    std::cout << "validation MPE " << fit.validation_mpe << "%\n";
    return kExitOk;
}

struct ValidateArgs {
    std::string path;
    std::string library_path;  // enables layout checking for designs
    bool grid = false;
};

int cmd_validate(const ValidateArgs& a) {
    const json doc = load_json_file(a.path);
    const std::string schema = doc.value("schema", "");
    if (schema == kAssetsSchema) {
        const AssetLibrary lib = load_library(a.path);
        std::cout << "valid asset library (" << lib.records().size() << " records)\n";
        return kExitOk;
    }
    if (schema == kWeatherSchema) {
        const auto profiles = load_weather(a.path);
        std::cout << "valid weather file (" << profiles.size() << " profiles)\n";
        return kExitOk;
    }
    if (schema == kDatasetSchema) {
        const TimeSeriesDataset d = dataset_from_json(doc);
        std::cout << "valid dataset (" << d.size() << " records)\n";
        return kExitOk;
    }
    if (schema == kStructureSchema) {
        const TwinStructure s = structure_from_json(doc);
        if (a.grid && s.kind == StructureKind::EquipmentDesign) {
            if (a.library_path.empty()) {
                throw ConfigError("--grid layout check requires --library");
            }
            const AssetLibrary lib = load_library(a.library_path);
            const ValidationReport report = validate_design(s, lib);
            if (!report.valid()) {
                for (const auto& v : report.violations) {
                    std::cerr << v.code << " (" << v.x << "," << v.y << "): " << v.message << "\n";
                }
                return kExitValidation;
            }
        }
        std::cout << "valid structure (" << s.digest() << ")\n";
        return kExitOk;
    }
    std::cerr << "unknown or missing schema id: '" << schema << "'\n";
    return kExitValidation;
}

// Mirror of loop.cpp's config echo, kept here for the echo file.
json config_echo_from(const RunConfig& c) {
    return {{"case", c.setup.kind == StructureKind::EquipmentDesign ? "equipment_design"
                                                                    : "mechanistic_model"},
            {"generator", generator_name(c.generator)},
            {"outer_iterations", c.outer_iterations},
            {"population", c.population},
            {"top_k", c.top_k},
            {"seed", c.seed},
            {"workers", c.workers},
            {"site", c.setup.site_id},
            {"compute_target_pflops", c.setup.compute_target_pflops}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bi-level digital-twin synthesis and calibration engine"};
    app.require_subcommand(1);

    GenDataArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Generate synthetic libraries and datasets");
    gen_cmd->add_option("--kind", gen.kind, "coil | assets | weather | all")
        ->check(CLI::IsMember({"coil", "assets", "weather", "all"}));
    gen_cmd->add_option("--seed", gen.seed, "RNG seed");
    gen_cmd->add_option("--out", gen.out, "Output directory");
    gen_cmd->add_option("--noise-sigma", gen.noise_sigma, "Sensor noise sigma (°C)");
    gen_cmd->add_flag("--perturb", gen.perturb, "Model-mismatch regime (scaled air cp)");
    gen_cmd->add_option("--records", gen.records, "Coil dataset length");

    CaseArgs c1;
    auto* case1 = app.add_subcommand("case1", "Equipment-selection design optimization");
    case1->add_option("--library", c1.library_path, "Asset library JSON")->required();
    case1->add_option("--weather", c1.weather_path, "Weather profiles JSON")->required();
    case1->add_option("--site", c1.site, "Weather location id");
    case1->add_option("--target", c1.target_pflops, "Compute target (petaFLOPS)");
    case1->add_option("--utilization", c1.utilization, "Server utilization fraction");
    case1->add_flag("--fit-setpoint", c1.fit_setpoint, "Enable the learnable CHW setpoint");

    CaseArgs c2;
    auto* case2 = app.add_subcommand("case2", "Coil mechanistic-model structure search");
    case2->add_option("--dataset", c2.dataset_path, "Coil dataset JSON")->required();
    case2->add_option("--inner-iters", c2.inner_iters, "Inner optimizer iteration budget");

    for (auto [cmd, args] : {std::pair{case1, &c1}, std::pair{case2, &c2}}) {
        cmd->add_option("--out", args->out, "Output directory");
        cmd->add_option("--generator", args->generator, "evo | scripted | llm")
            ->check(CLI::IsMember({"evo", "scripted", "llm"}));
        cmd->add_option("--repeats", args->repeats, "Independent repeats");
        cmd->add_option("--seed", args->seed, "Master seed");
        cmd->add_option("--iterations", args->iterations, "Outer-loop iterations");
        cmd->add_option("--population", args->population, "Population size");
        cmd->add_option("--top-k", args->top_k, "Feedback size K");
        cmd->add_option("--workers", args->workers, "Evaluation workers");
        cmd->add_option("--llm-url", args->llm_url, "Chat-completion endpoint base URL");
        cmd->add_option("--llm-model", args->llm_model, "LLM model name");
        cmd->add_flag("--fallback", args->fallback, "Fall back to scripted on LLM failure");
    }
    case1->add_option("--inner-iters", c1.inner_iters, "Inner optimizer iteration budget");

    CalibrateArgs cal;
    auto* calibrate = app.add_subcommand("calibrate", "Single inner-loop parameter fit");
    calibrate->add_option("--dataset", cal.dataset_path, "Coil dataset JSON")->required();
    calibrate->add_option("--out", cal.out, "Output directory");
    calibrate->add_option("--seed", cal.seed, "Seed");
    calibrate->add_option("--inner-iters", cal.inner_iters, "Iteration budget");
    calibrate->add_flag("--residual", cal.residual, "Enable the residual corrector");
    calibrate->add_option("--hidden", cal.hidden, "Residual hidden width");
    calibrate->add_flag("--log", cal.log_encoding, "Log-encode UA");
    calibrate->add_flag("--expert", cal.expert, "Fit the pure white-box expert baseline");

    ValidateArgs val;
    auto* validate = app.add_subcommand("validate", "Schema-check any input file");
    validate->add_option("path", val.path, "File to validate")->required();
    validate->add_option("--library", val.library_path, "Asset library for layout checks");
    validate->add_flag("--grid", val.grid, "Also run the layout validator on designs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen_cmd->parsed()) return cmd_gen_data(gen);
        if (case1->parsed()) return run_case(c1, StructureKind::EquipmentDesign);
        if (case2->parsed()) return run_case(c2, StructureKind::MechanisticModel);
        if (calibrate->parsed()) return cmd_calibrate(cal);
        if (validate->parsed()) return cmd_validate(val);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitConfig;
}
