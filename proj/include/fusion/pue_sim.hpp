#pragma once

#include <string>
#include <vector>

#include "fusion/assets.hpp"
#include "fusion/types.hpp"

namespace fusion {

struct DesignEvaluation {
    double it_power_w = 0.0;
    double cooling_power_w = 0.0;        // annual mean
    double distribution_loss_w = 0.0;
    double pue = 0.0;
    double compute_pflops = 0.0;
    bool feasible = false;
    std::vector<std::string> violations;

    // Breakdown used by the scripted generator's feedback step.
    double chiller_power_w = 0.0;
    double fan_pump_power_w = 0.0;
    double ups_loss_w = 0.0;
    double pdu_loss_w = 0.0;
};

struct SimOptions {
    double utilization = 0.8;        // fraction of rated server power
    double compute_target_pflops = 0.0;  // 0 disables the requirement check
    // Optional continuous setpoint (chilled-water supply, °C); NAN = library default 10.
    double chw_setpoint_c = 10.0;
};

// Steady-state hourly plant balance over the weather series. Undersized
// cooling or distribution yields feasible=false with the violations listed;
// no penalty PUE is fabricated.
DesignEvaluation simulate_design(const EquipmentDesign& design, const AssetLibrary& lib,
                                 const WeatherProfile& weather, const SimOptions& opts);

double compute_capability(const EquipmentDesign& design, const AssetLibrary& lib);

struct CapabilityCheck {
    double pflops = 0.0;
    double margin = 0.0;
    bool meets_target = false;
};

CapabilityCheck check_capability(const EquipmentDesign& design, const AssetLibrary& lib,
                                 double target_pflops);

}  // namespace fusion
