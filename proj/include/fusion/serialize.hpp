#pragma once

#include <string>

#include <json.hpp>

#include "fusion/types.hpp"

namespace fusion {

inline constexpr const char* kStructureSchema = "fusion-twin/structure-v1";
inline constexpr const char* kDatasetSchema = "fusion-twin/dataset-v1";
inline constexpr const char* kAssetsSchema = "fusion-twin/assets-v1";
inline constexpr const char* kWeatherSchema = "fusion-twin/weather-v1";
inline constexpr const char* kTruthSchema = "fusion-twin/truth-v1";

nlohmann::json structure_to_json(const TwinStructure& s);

// Strict: unknown fields rejected, every violation reported via SchemaError.
TwinStructure structure_from_json(const nlohmann::json& j);

nlohmann::json dataset_to_json(const TimeSeriesDataset& d);
TimeSeriesDataset dataset_from_json(const nlohmann::json& j);

nlohmann::json params_to_json(const ParameterVector& p);
ParameterVector params_from_json(const nlohmann::json& j);

nlohmann::json load_json_file(const std::string& path);     // IoError / ParseError
void save_json_file(const std::string& path, const nlohmann::json& j);

std::string encoding_name(Encoding e);
Encoding encoding_from_name(const std::string& s);

}  // namespace fusion
