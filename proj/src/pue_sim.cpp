#include "fusion/pue_sim.hpp"

#include <algorithm>
#include <cmath>

namespace fusion {

namespace {

struct PlantSelection {
    std::vector<const AssetRecord*> servers;
    std::vector<const AssetRecord*> chillers;
    std::vector<const AssetRecord*> air_liquid;  // CRAH + CDU units
    std::vector<const AssetRecord*> towers;
    std::vector<const AssetRecord*> ups;
    std::vector<const AssetRecord*> pdu;
};

PlantSelection collect(const EquipmentDesign& design, const AssetLibrary& lib) {
    PlantSelection sel;
    for (const auto& p : design.placements) {
        const AssetRecord& a = lib.find(p.asset_id);
        switch (a.category) {
            case Category::Server: sel.servers.push_back(&a); break;
            case Category::Chiller: sel.chillers.push_back(&a); break;
            case Category::CRAH:
            case Category::CDU: sel.air_liquid.push_back(&a); break;
            case Category::CoolingTower: sel.towers.push_back(&a); break;
            case Category::UPS: sel.ups.push_back(&a); break;
            case Category::PDU: sel.pdu.push_back(&a); break;
        }
    }
    return sel;
}

double total_capacity(const std::vector<const AssetRecord*>& units) {
    double c = 0.0;
    for (const auto* u : units) c += u->perf_at("capacity_w");
    return c;
}

// Capacity-weighted mean efficiency for a bank of UPS or PDU units.
double weighted_efficiency(const std::vector<const AssetRecord*>& units) {
    double cap = 0.0;
    double sum = 0.0;
    for (const auto* u : units) {
        const double c = u->perf_at("capacity_w");
        cap += c;
        sum += c * u->perf_at("efficiency");
    }
    return cap > 0.0 ? sum / cap : 0.0;
}

}  // namespace

double compute_capability(const EquipmentDesign& design, const AssetLibrary& lib) {
    double pflops = 0.0;
    for (const auto& p : design.placements) {
        const AssetRecord& a = lib.find(p.asset_id);
        if (a.category == Category::Server) {
            pflops += a.perf_at("petaflops");
        }
    }
    return pflops;
}

CapabilityCheck check_capability(const EquipmentDesign& design, const AssetLibrary& lib,
                                 double target_pflops) {
    CapabilityCheck c;
    c.pflops = compute_capability(design, lib);
    c.margin = c.pflops - target_pflops;
    c.meets_target = c.pflops >= target_pflops;
    return c;
}

DesignEvaluation simulate_design(const EquipmentDesign& design, const AssetLibrary& lib,
                                 const WeatherProfile& weather, const SimOptions& opts) {
    DesignEvaluation ev;
    const PlantSelection sel = collect(design, lib);

    for (const auto* s : sel.servers) {
        ev.it_power_w += s->perf_at("power_w") * opts.utilization;
        ev.compute_pflops += s->perf_at("petaflops");
    }

    if (sel.servers.empty()) ev.violations.push_back("no servers selected");
    if (sel.chillers.empty()) ev.violations.push_back("no chiller selected");
    if (sel.air_liquid.empty()) ev.violations.push_back("no CRAH or CDU selected");
    if (sel.towers.empty()) ev.violations.push_back("no cooling tower selected");
    if (sel.ups.empty()) ev.violations.push_back("no UPS selected");
    if (sel.pdu.empty()) ev.violations.push_back("no PDU selected");
    if (opts.compute_target_pflops > 0.0 && ev.compute_pflops < opts.compute_target_pflops) {
        ev.violations.push_back("compute capability below target");
    }
    if (!ev.violations.empty()) {
        return ev;
    }

    const double heat_load = ev.it_power_w;  // steady state: all IT power becomes heat
    auto check_capacity = [&](const char* what, double cap) {
        if (cap < heat_load) {
            ev.violations.push_back(std::string(what) + " capacity undersized (" +
                                    std::to_string(cap) + " W < " + std::to_string(heat_load) +
                                    " W load)");
        }
    };
    check_capacity("chiller", total_capacity(sel.chillers));
    check_capacity("air/liquid handler", total_capacity(sel.air_liquid));
    check_capacity("cooling tower", total_capacity(sel.towers));
    if (total_capacity(sel.ups) < ev.it_power_w) {
        ev.violations.push_back("UPS capacity below IT power");
    }
    if (total_capacity(sel.pdu) < ev.it_power_w) {
        ev.violations.push_back("PDU capacity below IT power");
    }
    if (!ev.violations.empty()) {
        return ev;
    }

    // Higher chilled-water setpoint lowers compressor lift but needs more
    // air/liquid flow; both effects are linear desk-scale stand-ins.
    const double setpoint_cop_bonus = 0.08 * (opts.chw_setpoint_c - 10.0);
    const double setpoint_fan_factor = std::max(0.1, 1.0 + 0.04 * (opts.chw_setpoint_c - 10.0));

    const double chiller_cap = total_capacity(sel.chillers);
    double chiller_mean = 0.0;
    for (double wb : weather.wetbulb_c) {
        double hour_power = 0.0;
        for (const auto* ch : sel.chillers) {
            const double share = heat_load * ch->perf_at("capacity_w") / chiller_cap;
            const double cop = std::clamp(
                ch->perf_at("cop_c0") - ch->perf_at("cop_c1") * wb + setpoint_cop_bonus, 1.0, 12.0);
            hour_power += share / cop;
        }
        chiller_mean += hour_power;
    }
    chiller_mean /= static_cast<double>(weather.wetbulb_c.size());

    double fan_pump = 0.0;
    for (const auto* u : sel.air_liquid) {
        fan_pump += (u->category == Category::CRAH ? u->perf_at("fan_power_w")
                                                   : u->perf_at("pump_power_w")) *
                    setpoint_fan_factor;
    }
    for (const auto* t : sel.towers) {
        fan_pump += t->perf_at("fan_power_w");
    }

    const double eta_ups = weighted_efficiency(sel.ups);
    const double eta_pdu = weighted_efficiency(sel.pdu);
    ev.ups_loss_w = ev.it_power_w * (1.0 / eta_ups - 1.0);
    ev.pdu_loss_w = ev.it_power_w * (1.0 / eta_pdu - 1.0);

    ev.chiller_power_w = chiller_mean;
    ev.fan_pump_power_w = fan_pump;
    ev.cooling_power_w = chiller_mean + fan_pump;
    ev.distribution_loss_w = ev.ups_loss_w + ev.pdu_loss_w;
    ev.pue = (ev.it_power_w + ev.cooling_power_w + ev.distribution_loss_w) / ev.it_power_w;
    ev.feasible = true;
    return ev;
}

}  // namespace fusion
