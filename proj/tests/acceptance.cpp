#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "fusion/datagen.hpp"
#include "fusion/llm_client.hpp"
#include "fusion/loop.hpp"
#include "fusion/serialize.hpp"

using namespace fusion;
using nlohmann::json;

namespace {

const std::string kDataDir = FUSION_TEST_DATA_DIR;

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(int criterion, const char* name, bool pass) {
    std::printf("[criterion %d] %-34s %s\n", criterion, name, pass ? "PASS" : "FAIL");
    std::fflush(stdout);
}

// Counter-flow two-stream ODE integration with RK4 plus shooting on the
// unknown cold outlet; independent of the closed form it cross-checks.
double effectiveness_ode(double ntu, double cr, int steps = 2000) {
    auto integrate = [&](double tc0, double* th_end) {
        double th = 1.0;
        double tc = tc0;
        const double h = 1.0 / steps;
        auto f = [&](double thv, double tcv, double& dth, double& dtc) {
            const double d = thv - tcv;
            dth = -ntu * d;
            dtc = -ntu * cr * d;
        };
        for (int i = 0; i < steps; ++i) {
            double k1h, k1c, k2h, k2c, k3h, k3c, k4h, k4c;
            f(th, tc, k1h, k1c);
            f(th + 0.5 * h * k1h, tc + 0.5 * h * k1c, k2h, k2c);
            f(th + 0.5 * h * k2h, tc + 0.5 * h * k2c, k3h, k3c);
            f(th + h * k3h, tc + h * k3c, k4h, k4c);
            th += h / 6.0 * (k1h + 2 * k2h + 2 * k3h + k4h);
            tc += h / 6.0 * (k1c + 2 * k2c + 2 * k3c + k4c);
        }
        if (th_end) *th_end = th;
        return tc;
    };
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (integrate(mid, nullptr) > 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    double th_end = 1.0;
    integrate(0.5 * (lo + hi), &th_end);
    return 1.0 - th_end;
}

TwinStructure coil_structure(double lo, double hi, Encoding enc = Encoding::Linear) {
    ModelArch a;
    a.family = "coil_counterflow";
    a.params.push_back({"UA", lo, hi, enc});
    TwinStructure s;
    s.kind = StructureKind::MechanisticModel;
    s.body = std::move(a);
    return s;
}

TimeSeriesDataset load_dataset(const std::string& path) {
    return dataset_from_json(load_json_file(path));
}

class MockChatServer {
  public:
    explicit MockChatServer(std::vector<std::string> replies) : replies_(std::move(replies)) {
        server_.Post("/chat/completions",
                     [this](const httplib::Request&, httplib::Response& res) {
                         const std::size_t i =
                             std::min(hits_.fetch_add(1), replies_.size() - 1);
                         const json body = {{"choices",
                                             json::array({{{"message",
                                                            {{"role", "assistant"},
                                                             {"content", replies_[i]}}}}})}};
                         res.set_content(body.dump(), "application/json");
                     });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockChatServer() {
        server_.stop();
        thread_.join();
    }
    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    std::size_t hits() const { return hits_.load(); }

  private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::vector<std::string> replies_;
    std::atomic<std::size_t> hits_{0};
};

std::string valid_model_reply(Encoding enc, bool residual, int hidden) {
    ModelArch a;
    a.family = "coil_counterflow";
    a.params.push_back({"UA", 100.0, 30000.0, enc});
    a.residual.enabled = residual;
    a.residual.hidden_width = hidden;
    TwinStructure s;
    s.kind = StructureKind::MechanisticModel;
    s.provenance = Provenance::Generated;
    s.body = std::move(a);
    return "```json\n" + structure_to_json(s).dump() + "\n```";
}

}  // namespace

TEST_CASE("criterion 1: physics oracle") {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = true;

    for (int i = 0; i < 10 && pass; ++i) {
        for (int j = 0; j < 10 && pass; ++j) {
            const double ntu = 5.0 * i / 9.0;
            const double cr = static_cast<double>(j) / 9.0;
            const double closed = effectiveness_counterflow(ntu, cr);
            const double ode = effectiveness_ode(ntu, cr);
            if (std::abs(closed - ode) > 1e-6) {
                pass = false;
            }
        }
    }

    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> temp(0.0, 45.0);
    std::uniform_real_distribution<double> flow(0.2, 6.0);
    std::uniform_real_distribution<double> ua(50.0, 40000.0);
    for (int n = 0; n < 1000 && pass; ++n) {
        CoilSpec spec;
        spec.ua = ua(rng);
        const StreamIn water{temp(rng), flow(rng)};
        const StreamIn air{temp(rng), flow(rng)};
        const CoilOutlets out = coil_outlets(spec, water, air);
        const double cw = water.flow_kgs * spec.cp_water;
        const double ca = air.flow_kgs * spec.cp_air;
        const double q = cw * (out.water_out_c - water.temp_c);
        const double resid = q + ca * (out.air_out_c - air.temp_c);
        if (std::abs(resid) > 1e-6 * std::max(std::abs(q), 1.0)) {
            pass = false;
        }
    }

    const double elapsed = seconds_since(t0);
    pass = pass && elapsed < 5.0;
    report(1, "physics oracle", pass);
    CHECK(pass);
    CHECK(elapsed < 5.0);
}

TEST_CASE("criterion 2: gradient correctness") {
    CoilDataConfig cfg;
    cfg.seed = 1;
    cfg.n_records = 60;
    cfg.noise_sigma_c = 0.0;
    const TimeSeriesDataset data = gen_coil_dataset(cfg).dataset;
    const LossWeights weights;
    const TwinStructure lin = coil_structure(100.0, 40000.0);
    const TwinStructure logged = coil_structure(100.0, 40000.0, Encoding::Log);
    auto lin_loss = [&](const ParameterVector& p) {
        return composite_loss(lin, p, data, train_range(data), weights);
    };
    auto log_loss = [&](const ParameterVector& p) {
        return composite_loss(logged, p, data, train_range(data), weights);
    };

    bool pass = true;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> logua(std::log(150.0), std::log(25000.0));
    int done = 0;
    while (done < 20) {
        const double ua = std::exp(logua(rng));
        // Near the data-generating optimum both gradients vanish and relative
        // error is undefined; sample away from it.
        if (std::abs(ua - 3000.0) < 0.15 * 3000.0) continue;
        ++done;

        ParameterVector pl;
        pl.entries.push_back({"UA", ua, 100.0, 40000.0, Encoding::Linear});
        const double analytic = analytic_loss_gradient_ua(lin, pl, data, train_range(data), weights);
        const double fd = fd_gradient(lin_loss, pl)[0];
        if (std::abs(analytic - fd) > 1e-4 * std::max(std::abs(analytic), std::abs(fd))) {
            pass = false;
        }

        ParameterVector pz;
        pz.entries.push_back({"UA", ua, 100.0, 40000.0, Encoding::Log});
        const double dz = fd_gradient(log_loss, pz)[0];
        const double chain = ua * analytic;  // z = ln(UA)
        if (std::abs(dz - chain) > 1e-6 * std::max(std::abs(chain), 1e-12)) {
            pass = false;
        }
    }
    report(2, "gradient correctness", pass);
    CHECK(pass);
}

TEST_CASE("criterion 3: parameter recovery") {
    const auto t0 = std::chrono::steady_clock::now();
    const TimeSeriesDataset data = load_dataset(kDataDir + "/coil_clean/coil_dataset.json");
    const json truth = load_json_file(kDataDir + "/coil_clean/coil_truth.json");
    const double ua_true = truth.at("ua_true").get<double>();

    // Bounds placed so the midpoint start sits near 6x the true conductance.
    const TwinStructure s = coil_structure(100.0, 12.0 * ua_true);
    Budget budget;
    budget.max_iters = 500;
    budget.seed = 1;
    const ParameterVector start = initial_params(s, budget.seed);
    const double start_ratio = start.get("UA") / ua_true;

    const FitReport fit = optimize_parameters(s, data, LossWeights{}, budget);
    const double elapsed = seconds_since(t0);
    const double rel_err = std::abs(fit.fitted.get("UA") - ua_true) / ua_true;

    const bool pass = !fit.failed && start_ratio > 5.0 && rel_err < 0.01 &&
                      fit.iterations_used <= 500 && elapsed < 10.0;
    std::printf("    start %.0fx off, recovered UA %.1f (true %.1f), %d iterations, %.2f s\n",
                start_ratio, fit.fitted.get("UA"), ua_true, fit.iterations_used, elapsed);
    report(3, "parameter recovery", pass);
    CHECK(pass);
}

TEST_CASE("criterion 4: structure search beats the white-box expert") {
    const auto t0 = std::chrono::steady_clock::now();
    const TimeSeriesDataset data = load_dataset(kDataDir + "/coil_perturbed/coil_dataset.json");

    RunConfig config;
    config.setup.kind = StructureKind::MechanisticModel;
    config.generator = GeneratorChoice::Scripted;
    config.outer_iterations = 4;
    config.population = 1;
    config.top_k = 1;
    config.inner_budget.max_iters = 500;
    config.seed = 42;
    config.dataset = &data;
    const RunTrace trace = run(config);

    Budget budget = config.inner_budget;
    budget.seed = config.seed;
    const FitReport expert = baseline_whitebox_expert(data, config.weights, budget, 100.0, 30000.0);

    const double best_mpe = trace.best.outer_cost;
    const double gap = expert.validation_mpe / best_mpe;
    const double elapsed = seconds_since(t0);
    const bool augmented = !trace.best.failed && trace.best.structure.arch().residual.enabled &&
                           trace.best.structure.arch().params[0].encoding == Encoding::Log;
    const bool pass = augmented && !expert.failed && best_mpe < expert.validation_mpe &&
                      gap >= 1.5 && elapsed < 120.0;
    std::printf("    fusion best MPE %.4f%% vs expert %.4f%% (gap %.2fx), %.1f s\n", best_mpe,
                expert.validation_mpe, gap, elapsed);
    report(4, "model fusion vs expert baseline", pass);
    CHECK(pass);
}

TEST_CASE("criterion 5: design search initialization and refinement") {
    const auto t0 = std::chrono::steady_clock::now();
    const AssetLibrary library = gen_assets(7);
    const auto weather = gen_weather(7);

    RunConfig base;
    base.setup.kind = StructureKind::EquipmentDesign;
    base.setup.site_id = "temperate-1";
    base.setup.compute_target_pflops = 50.0;
    base.setup.grid = {40, 40, 1, true};
    base.outer_iterations = 5;
    base.seed = 42;
    base.library = &library;
    base.weather = &weather;

    RunConfig evo = base;
    evo.generator = GeneratorChoice::Evolutionary;
    evo.population = 10;
    evo.top_k = 5;
    RunConfig scripted = base;
    scripted.generator = GeneratorChoice::Scripted;
    scripted.population = 1;
    scripted.top_k = 1;

    const RepeatedAggregate evo_agg = run_repeated(evo, 5);
    const RepeatedAggregate scripted_agg = run_repeated(scripted, 5);

    bool monotone = true;
    for (const auto* agg : {&evo_agg, &scripted_agg}) {
        for (const auto& t : agg->traces) {
            double prev = std::numeric_limits<double>::infinity();
            for (const auto& it : t.iterations) {
                if (it.best_so_far > prev) monotone = false;
                prev = it.best_so_far;
            }
        }
    }
    const bool better_init = scripted_agg.mean_best.front() < evo_agg.mean_best.front();
    const bool better_final = scripted_agg.mean_best.back() <= evo_agg.mean_best.back();
    const double elapsed = seconds_since(t0);
    const bool pass = monotone && better_init && better_final && elapsed < 120.0;
    std::printf("    iteration-0 mean best PUE: scripted %.4f vs evolutionary %.4f\n",
                scripted_agg.mean_best.front(), evo_agg.mean_best.front());
    std::printf("    final mean best PUE:       scripted %.4f vs evolutionary %.4f (%.1f s)\n",
                scripted_agg.mean_best.back(), evo_agg.mean_best.back(), elapsed);
    report(5, "design search vs evolutionary", pass);
    CHECK(pass);
}

TEST_CASE("criterion 6: monotone plant physics") {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    bool pass = true;

    for (int check = 0; check < 10000 && pass; ++check) {
        const double server_power = 0.3e6 + 1.5e6 * u01(rng);
        const double ups_eff = 0.85 + 0.13 * u01(rng);
        const double pdu_eff = 0.90 + 0.09 * u01(rng);
        const double c1 = 0.02 + 0.2 * u01(rng);
        const double c0 = 35.0 * c1 + 1.0 + 8.0 * u01(rng);

        std::vector<AssetRecord> recs;
        recs.push_back({"srv", Category::Server,
                        {{"petaflops", 10.0}, {"power_w", server_power}}, 1, 1, 1.0});
        recs.push_back({"chl", Category::Chiller,
                        {{"capacity_w", 5e6}, {"cop_c0", c0}, {"cop_c1", c1}}, 1, 1, 1.0});
        recs.push_back({"crh", Category::CRAH,
                        {{"capacity_w", 5e6}, {"fan_power_w", 1e3 + 60e3 * u01(rng)}}, 1, 1, 1.0});
        recs.push_back({"twr", Category::CoolingTower,
                        {{"capacity_w", 5e6}, {"fan_power_w", 1e3 + 30e3 * u01(rng)}}, 1, 1, 1.0});
        recs.push_back({"ups", Category::UPS,
                        {{"capacity_w", 5e6}, {"efficiency", ups_eff}}, 1, 1, 1.0});
        recs.push_back({"pdu", Category::PDU,
                        {{"capacity_w", 5e6}, {"efficiency", pdu_eff}}, 1, 1, 1.0});
        const AssetLibrary lib(std::move(recs));

        EquipmentDesign d;
        d.grid = {10, 10, 1, true};
        d.placements = {{"srv", 0, 0, Orientation::North}, {"chl", 0, 2, Orientation::North},
                        {"crh", 2, 2, Orientation::North}, {"twr", 4, 2, Orientation::North},
                        {"ups", 6, 2, Orientation::North}, {"pdu", 8, 2, Orientation::North}};

        WeatherProfile base;
        base.wetbulb_c.resize(288);
        base.drybulb_c.resize(288);
        WeatherProfile hot = base;
        for (int h = 0; h < 288; ++h) {
            base.wetbulb_c[h] = 28.0 * u01(rng);
            hot.wetbulb_c[h] = base.wetbulb_c[h] + 6.0 * u01(rng);
            base.drybulb_c[h] = base.wetbulb_c[h] + 5.0;
            hot.drybulb_c[h] = hot.wetbulb_c[h] + 5.0;
        }

        SimOptions opts;
        const auto ev = simulate_design(d, lib, base, opts);
        if (!ev.feasible || ev.pue < 1.0) {
            pass = false;
            break;
        }
        const auto ev_hot = simulate_design(d, lib, hot, opts);
        if (!ev_hot.feasible || ev_hot.pue < ev.pue) {
            pass = false;
            break;
        }
        // Improve the UPS bank and re-check.
        std::vector<AssetRecord> recs2 = lib.records();
        for (auto& r : recs2) {
            if (r.category == Category::UPS) {
                r.perf["efficiency"] = std::min(1.0, ups_eff + 0.2 * u01(rng));
            }
        }
        const AssetLibrary lib2(std::move(recs2));
        const auto ev_ups = simulate_design(d, lib2, base, opts);
        if (!ev_ups.feasible || ev_ups.pue > ev.pue) {
            pass = false;
            break;
        }
    }
    const double elapsed = seconds_since(t0);
    pass = pass && elapsed < 30.0;
    std::printf("    10000 randomized checks in %.1f s\n", elapsed);
    report(6, "monotone plant physics", pass);
    CHECK(pass);
}

TEST_CASE("criterion 7: byte-identical trace CSVs") {
    const AssetLibrary library = gen_assets(7);
    const auto weather = gen_weather(7);
    const TimeSeriesDataset data = load_dataset(kDataDir + "/coil_clean/coil_dataset.json");

    RunConfig case1;
    case1.setup.kind = StructureKind::EquipmentDesign;
    case1.setup.site_id = "arid-1";
    case1.setup.compute_target_pflops = 50.0;
    case1.setup.grid = {40, 40, 1, true};
    case1.generator = GeneratorChoice::Evolutionary;
    case1.outer_iterations = 3;
    case1.population = 8;
    case1.top_k = 4;
    case1.seed = 42;
    case1.library = &library;
    case1.weather = &weather;

    RunConfig case2;
    case2.setup.kind = StructureKind::MechanisticModel;
    case2.generator = GeneratorChoice::Scripted;
    case2.outer_iterations = 2;
    case2.population = 1;
    case2.top_k = 1;
    case2.inner_budget.max_iters = 80;
    case2.seed = 42;
    case2.dataset = &data;

    const bool c1_same = trace_csv(run(case1)) == trace_csv(run(case1));
    const bool c2_same = trace_csv(run(case2)) == trace_csv(run(case2));
    const bool pass = c1_same && c2_same;
    report(7, "deterministic trace CSVs", pass);
    CHECK(pass);
}

TEST_CASE("criterion 8: LLM path contract") {
    GenerationContext ctx;
    ctx.setup.kind = StructureKind::MechanisticModel;
    ctx.iteration = 0;
    ctx.seed = 42;
    ctx.population = 1;
    bool pass = true;

    {  // Valid reply round trip.
        MockChatServer server({valid_model_reply(Encoding::Log, true, 8)});
        LlmEndpointConfig e;
        e.base_url = server.base_url();
        const auto r = propose_llm(ctx, e);
        pass = pass && r.structures.size() == 1 && r.retries_used == 0 &&
               r.structures[0].arch().residual.enabled;
    }
    {  // Retry on malformed.
        MockChatServer server({"not a document", valid_model_reply(Encoding::Linear, false, 8)});
        LlmEndpointConfig e;
        e.base_url = server.base_url();
        e.retries = 2;
        const auto r = propose_llm(ctx, e);
        pass = pass && r.structures.size() == 1 && r.retries_used == 1 && server.hits() == 2;
    }
    {  // Fallback to scripted.
        MockChatServer server({"still not a document"});
        LlmEndpointConfig e;
        e.base_url = server.base_url();
        e.retries = 1;
        e.fallback_to_scripted = true;
        const auto r = propose_llm(ctx, e);
        pass = pass && r.degraded_to_scripted && !r.structures.empty();
    }
    {  // Zero schema-invalid structures reach evaluation in a full run.
        const TimeSeriesDataset data = load_dataset(kDataDir + "/coil_clean/coil_dataset.json");
        MockChatServer server({
            "```json\n{\"schema\": \"fusion-twin/structure-v1\", \"hallucination\": true}\n```",
            valid_model_reply(Encoding::Log, true, 4),
            "garbage with no structure at all",
            valid_model_reply(Encoding::Linear, false, 4),
        });
        RunConfig config;
        config.setup.kind = StructureKind::MechanisticModel;
        config.generator = GeneratorChoice::Llm;
        config.endpoint.base_url = server.base_url();
        config.endpoint.retries = 2;
        config.endpoint.fallback_to_scripted = true;
        config.outer_iterations = 2;
        config.population = 1;
        config.top_k = 1;
        config.inner_budget.max_iters = 30;
        config.seed = 42;
        config.dataset = &data;
        const RunTrace trace = run(config);
        for (const auto& it : trace.iterations) {
            for (const auto& c : it.candidates) {
                GenerationContext gate = ctx;
                if (proposal_violation(c.structure, gate)) pass = false;
            }
        }
        pass = pass && !trace.best.failed;
    }
    report(8, "LLM path contract", pass);
    CHECK(pass);
}
