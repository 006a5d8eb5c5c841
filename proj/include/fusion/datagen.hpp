#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fusion/assets.hpp"
#include "fusion/types.hpp"

namespace fusion {

// Synthetic stand-ins for the production device library, site weather and
// coil sensor data, all reproducible from a seed.

AssetLibrary gen_assets(std::uint64_t seed);

std::vector<WeatherProfile> gen_weather(std::uint64_t seed);

struct CoilDataConfig {
    std::uint64_t seed = 1;
    std::size_t n_records = 400;
    double split_fraction = 0.5;
    double noise_sigma_c = 0.1;     // Gaussian sensor noise on outlet temps
    bool perturb_physics = false;   // model-mismatch regime: true cp_air scaled
    double cp_air_scale = 0.85;
    double ua_true = 3000.0;        // W/K
};

struct CoilData {
    TimeSeriesDataset dataset;
    nlohmann::json truth;  // ground-truth sidecar (schema fusion-twin/truth-v1)
};

CoilData gen_coil_dataset(const CoilDataConfig& cfg);

}  // namespace fusion
