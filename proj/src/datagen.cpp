#include "fusion/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fusion/coil.hpp"
#include "fusion/serialize.hpp"
#include "fusion/twin.hpp"

namespace fusion {

namespace {

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

std::string padded_id(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s-%02d", prefix, i);
    return buf;
}

}  // namespace

AssetLibrary gen_assets(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto uni = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    std::vector<AssetRecord> records;

    for (int i = 0; i < 14; ++i) {
        AssetRecord r;
        r.id = padded_id("srv", i);
        r.category = Category::Server;
        const double pflops = round3(uni(0.5, 2.5));
        r.perf["petaflops"] = pflops;
        r.perf["power_w"] = std::round(pflops * uni(18000.0, 45000.0));
        r.footprint_w = 1;
        r.footprint_d = 1;
        r.cost_index = round3(uni(0.8, 2.0));
        records.push_back(r);
    }
    for (int i = 0; i < 10; ++i) {
        AssetRecord r;
        r.id = padded_id("chl", i);
        r.category = Category::Chiller;
        r.perf["capacity_w"] = std::round(uni(4e5, 2.5e6));
        const double c1 = round3(uni(0.04, 0.12));
        // Keep COP positive with margin at 35 °C wet-bulb.
        r.perf["cop_c0"] = round3(uni(35.0 * c1 + 1.5, 35.0 * c1 + 6.0));
        r.perf["cop_c1"] = c1;
        r.footprint_w = 2;
        r.footprint_d = 2;
        r.cost_index = round3(uni(1.0, 3.0));
        records.push_back(r);
    }
    for (int i = 0; i < 8; ++i) {
        AssetRecord r;
        r.id = padded_id("crh", i);
        r.category = Category::CRAH;
        const double cap = std::round(uni(2e5, 1.2e6));
        r.perf["capacity_w"] = cap;
        r.perf["fan_power_w"] = std::round(cap * uni(0.01, 0.04));
        r.footprint_w = 1;
        r.footprint_d = 2;
        r.cost_index = round3(uni(0.8, 1.8));
        records.push_back(r);
    }
    for (int i = 0; i < 8; ++i) {
        AssetRecord r;
        r.id = padded_id("cdu", i);
        r.category = Category::CDU;
        const double cap = std::round(uni(3e5, 1.5e6));
        r.perf["capacity_w"] = cap;
        r.perf["pump_power_w"] = std::round(cap * uni(0.005, 0.02));
        r.footprint_w = 1;
        r.footprint_d = 1;
        r.cost_index = round3(uni(0.9, 2.2));
        records.push_back(r);
    }
    for (int i = 0; i < 8; ++i) {
        AssetRecord r;
        r.id = padded_id("twr", i);
        r.category = Category::CoolingTower;
        const double cap = std::round(uni(5e5, 3e6));
        r.perf["capacity_w"] = cap;
        r.perf["fan_power_w"] = std::round(cap * uni(0.004, 0.015));
        r.footprint_w = 2;
        r.footprint_d = 2;
        r.cost_index = round3(uni(0.7, 1.6));
        records.push_back(r);
    }
    for (int i = 0; i < 9; ++i) {
        AssetRecord r;
        r.id = padded_id("ups", i);
        r.category = Category::UPS;
        r.perf["capacity_w"] = std::round(uni(5e5, 3e6));
        r.perf["efficiency"] = round3(uni(0.90, 0.99));
        r.footprint_w = 1;
        r.footprint_d = 1;
        r.cost_index = round3(uni(0.8, 1.8));
        records.push_back(r);
    }
    for (int i = 0; i < 9; ++i) {
        AssetRecord r;
        r.id = padded_id("pdu", i);
        r.category = Category::PDU;
        r.perf["capacity_w"] = std::round(uni(5e5, 3e6));
        r.perf["efficiency"] = round3(uni(0.94, 0.995));
        r.footprint_w = 1;
        r.footprint_d = 1;
        r.cost_index = round3(uni(0.6, 1.4));
        records.push_back(r);
    }
    return AssetLibrary(std::move(records));
}

std::vector<WeatherProfile> gen_weather(std::uint64_t seed) {
    struct ClimateSpec {
        const char* id;
        ClimateTag tag;
        double wb_mean;
        double seasonal_amp;
        double diurnal_amp;
        double db_offset;
    };
    // 288-entry bins: 12 months x 24 hours.
    const ClimateSpec climates[] = {
        {"tropical-1", ClimateTag::Tropical, 26.0, 1.5, 1.0, 5.0},
        {"arid-1", ClimateTag::Arid, 16.0, 6.0, 4.0, 14.0},
        {"temperate-1", ClimateTag::Temperate, 12.0, 7.0, 2.5, 6.0},
        {"continental-1", ClimateTag::Continental, 7.0, 12.0, 3.0, 7.0},
        {"polar-1", ClimateTag::Polar, -8.0, 10.0, 1.5, 4.0},
    };
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> noise(-0.5, 0.5);
    std::vector<WeatherProfile> out;
    for (const auto& c : climates) {
        WeatherProfile w;
        w.location_id = c.id;
        w.climate = c.tag;
        w.wetbulb_c.reserve(288);
        w.drybulb_c.reserve(288);
        for (int month = 0; month < 12; ++month) {
            const double season = std::cos(2.0 * M_PI * (month - 6) / 12.0);
            for (int hour = 0; hour < 24; ++hour) {
                const double diurnal = std::cos(2.0 * M_PI * (hour - 14) / 24.0);
                double wb = c.wb_mean + c.seasonal_amp * season + c.diurnal_amp * diurnal +
                            noise(rng);
                wb = std::clamp(wb, -45.0, 34.0);
                const double db = wb + c.db_offset * (0.6 + 0.4 * std::abs(diurnal));
                w.wetbulb_c.push_back(round3(wb));
                w.drybulb_c.push_back(round3(db));
            }
        }
        out.push_back(std::move(w));
    }
    return out;
}

CoilData gen_coil_dataset(const CoilDataConfig& cfg) {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    CoilSpec truth_spec;
    truth_spec.ua = cfg.ua_true;
    if (cfg.perturb_physics) {
        truth_spec.cp_air = kCpAir * cfg.cp_air_scale;
    }

    // Smoothed random-walk inlet schedules, clipped to plausible coil ranges.
    struct Walk {
        double lo, hi, value, rate;
    };
    Walk water_t{6.0, 14.0, 10.0, 0.6};
    Walk air_t{24.0, 36.0, 30.0, 0.9};
    Walk water_f{1.0, 3.0, 2.0, 0.15};
    Walk air_f{2.0, 4.0, 3.0, 0.2};
    auto step_walk = [&](Walk& w) {
        w.value += w.rate * (2.0 * u01(rng) - 1.0);
        w.value = std::clamp(w.value, w.lo, w.hi);
        return w.value;
    };

    TimeSeriesDataset d;
    d.records.resize(cfg.n_records);
    StreamIn water{10.0, 2.0};
    StreamIn air{30.0, 3.0};
    CoilOutlets prev_out = coil_outlets(truth_spec, water, air);
    for (std::size_t t = 0; t < cfg.n_records; ++t) {
        Record& r = d.records[t];
        r.state.timestamp = static_cast<int>(t);
        r.state.values[kWaterOutVar] = round3(prev_out.water_out_c + cfg.noise_sigma_c * gauss(rng));
        r.state.values[kAirOutVar] = round3(prev_out.air_out_c + cfg.noise_sigma_c * gauss(rng));
        water.temp_c = round3(step_walk(water_t));
        air.temp_c = round3(step_walk(air_t));
        water.flow_kgs = round3(step_walk(water_f));
        air.flow_kgs = round3(step_walk(air_f));
        r.action.values[kWaterInVar] = water.temp_c;
        r.action.values[kAirInVar] = air.temp_c;
        r.action.values[kWaterFlowVar] = water.flow_kgs;
        r.action.values[kAirFlowVar] = air.flow_kgs;
        prev_out = coil_outlets(truth_spec, water, air);
    }
    d.split_index = static_cast<std::size_t>(
        std::clamp(cfg.split_fraction * static_cast<double>(cfg.n_records), 1.0,
                   static_cast<double>(cfg.n_records - 1)));
    d.validate();

    CoilData out;
    out.dataset = std::move(d);
    out.truth = {{"schema", kTruthSchema},
                 {"ua_true", cfg.ua_true},
                 {"cp_air_scale", cfg.perturb_physics ? cfg.cp_air_scale : 1.0},
                 {"noise_sigma_c", cfg.noise_sigma_c},
                 {"seed", cfg.seed},
                 {"n_records", cfg.n_records}};
    return out;
}

}  // namespace fusion
