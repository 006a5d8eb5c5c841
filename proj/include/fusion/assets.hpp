#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fusion/types.hpp"

namespace fusion {

enum class Category { Server, Chiller, CRAH, CDU, CoolingTower, UPS, PDU };

std::string category_name(Category c);
Category category_from_name(const std::string& s);

// Category-specific perf keys:
//   Server:       petaflops, power_w
//   Chiller:      capacity_w, cop_c0, cop_c1   (COP(T_wb) = clamp(c0 - c1*T_wb, 1, 12))
//   CRAH:         capacity_w, fan_power_w
//   CDU:          capacity_w, pump_power_w
//   CoolingTower: capacity_w, fan_power_w
//   UPS:          capacity_w, efficiency
//   PDU:          capacity_w, efficiency
struct AssetRecord {
    std::string id;
    Category category = Category::Server;
    std::map<std::string, double> perf;
    int footprint_w = 1;
    int footprint_d = 1;
    double cost_index = 1.0;

    double perf_at(const std::string& key) const;  // UnknownVariable if missing
};

double chiller_cop(const AssetRecord& chiller, double wetbulb_c);

class AssetLibrary {
  public:
    AssetLibrary() = default;
    explicit AssetLibrary(std::vector<AssetRecord> records);  // sorts by id, checks invariants

    const std::vector<AssetRecord>& records() const { return records_; }
    const AssetRecord& find(const std::string& id) const;  // UnresolvedAsset if absent
    const AssetRecord* try_find(const std::string& id) const;
    bool empty() const { return records_.empty(); }

  private:
    std::vector<AssetRecord> records_;
};

struct AssetFilter {
    std::optional<Category> category;
    // perf-field name -> inclusive bound
    std::map<std::string, double> min_perf;
    std::map<std::string, double> max_perf;
};

std::vector<AssetRecord> query(const AssetLibrary& lib, const AssetFilter& filter);

enum class ClimateTag { Tropical, Arid, Temperate, Continental, Polar };

std::string climate_name(ClimateTag c);
ClimateTag climate_from_name(const std::string& s);

struct WeatherProfile {
    std::string location_id;
    ClimateTag climate = ClimateTag::Temperate;
    // Either 8760 hourly values or a 288-entry (24h x 12mo) bin representation.
    std::vector<double> wetbulb_c;
    std::vector<double> drybulb_c;

    double mean_wetbulb() const;
};

AssetLibrary load_library(const std::string& path);
void save_library(const std::string& path, const AssetLibrary& lib);

std::vector<WeatherProfile> load_weather(const std::string& path);
void save_weather(const std::string& path, const std::vector<WeatherProfile>& profiles);

const WeatherProfile& find_profile(const std::vector<WeatherProfile>& profiles,
                                   const std::string& id);

struct Violation {
    std::string code;
    std::string message;
    int x = -1;
    int y = -1;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool valid() const { return violations.empty(); }
    std::string summary() const;
};

// Geometric layout rules: in-bounds footprints, no overlap, server rows
// separated by >= clearance, alternating row orientation when flagged.
ValidationReport validate_layout(const EquipmentDesign& design, const AssetLibrary& lib);

// Full design validation: structural + asset resolution + layout.
ValidationReport validate_design(const TwinStructure& s, const AssetLibrary& lib);

}  // namespace fusion
