#include "fusion/generators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <set>

#include <json.hpp>

#include "fusion/llm_client.hpp"
#include "fusion/serialize.hpp"

namespace fusion {

using nlohmann::json;

namespace {

std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Selection + layout helpers for equipment designs
// ---------------------------------------------------------------------------

struct Selection {
    std::vector<std::string> servers;
    std::vector<std::string> chillers;
    std::vector<std::string> air_liquid;  // CRAH/CDU unit ids
    std::vector<std::string> towers;
    std::vector<std::string> ups;
    std::vector<std::string> pdu;
};

Selection selection_of(const EquipmentDesign& d, const AssetLibrary& lib) {
    Selection s;
    for (const auto& p : d.placements) {
        switch (lib.find(p.asset_id).category) {
            case Category::Server: s.servers.push_back(p.asset_id); break;
            case Category::Chiller: s.chillers.push_back(p.asset_id); break;
            case Category::CRAH:
            case Category::CDU: s.air_liquid.push_back(p.asset_id); break;
            case Category::CoolingTower: s.towers.push_back(p.asset_id); break;
            case Category::UPS: s.ups.push_back(p.asset_id); break;
            case Category::PDU: s.pdu.push_back(p.asset_id); break;
        }
    }
    return s;
}

double it_load_w(const std::vector<std::string>& servers, const AssetLibrary& lib,
                 double utilization) {
    double w = 0.0;
    for (const auto& id : servers) {
        w += lib.find(id).perf_at("power_w") * utilization;
    }
    return w;
}

// Deterministic first-fit placement: rack rows with alternating orientation
// and the configured clearance, support gear packed below the racks.
std::optional<std::vector<Placement>> first_fit_layout(const Selection& sel,
                                                       const AssetLibrary& lib,
                                                       const HallGrid& grid) {
    std::vector<Placement> placements;
    int y = 0;
    int x = 0;
    int row = 0;
    for (const auto& id : sel.servers) {
        if (x >= grid.width) {
            x = 0;
            y += 1 + grid.clearance;
            ++row;
        }
        if (y >= grid.depth) return std::nullopt;
        placements.push_back(
            {id, x, y, row % 2 == 0 ? Orientation::North : Orientation::South});
        ++x;
    }
    // Support equipment: packed rows below the rack block.
    int infra_y = sel.servers.empty() ? 0 : y + 1 + grid.clearance;
    int infra_x = 0;
    int row_h = 0;
    auto place_units = [&](const std::vector<std::string>& ids) -> bool {
        for (const auto& id : ids) {
            const AssetRecord& a = lib.find(id);
            if (infra_x + a.footprint_w > grid.width) {
                infra_x = 0;
                infra_y += row_h;
                row_h = 0;
            }
            if (infra_x + a.footprint_w > grid.width ||
                infra_y + a.footprint_d > grid.depth) {
                return false;
            }
            placements.push_back({id, infra_x, infra_y, Orientation::North});
            infra_x += a.footprint_w;
            row_h = std::max(row_h, a.footprint_d);
        }
        return true;
    };
    if (!place_units(sel.chillers) || !place_units(sel.air_liquid) ||
        !place_units(sel.towers) || !place_units(sel.ups) || !place_units(sel.pdu)) {
        return std::nullopt;
    }
    return placements;
}

TwinStructure design_from_selection(const Selection& sel, const GenerationContext& ctx,
                                    Provenance prov) {
    EquipmentDesign d;
    d.site_id = ctx.setup.site_id;
    d.grid = ctx.setup.grid;
    auto layout = first_fit_layout(sel, *ctx.library, d.grid);
    if (!layout) {
        throw DomainError("design_from_selection: selection does not fit the hall grid");
    }
    d.placements = std::move(*layout);
    if (ctx.setup.fit_setpoint) {
        d.params.push_back({"chw_setpoint_c", 5.0, 15.0, Encoding::Linear});
    }
    TwinStructure s;
    s.kind = StructureKind::EquipmentDesign;
    s.provenance = prov;
    s.body = std::move(d);
    return s;
}

std::vector<AssetRecord> of_category(const AssetLibrary& lib, Category c) {
    AssetFilter f;
    f.category = c;
    return query(lib, f);
}

// Random design: draw units with replacement until each capacity is covered.
std::optional<Selection> random_selection(std::mt19937_64& rng, const GenerationContext& ctx) {
    const AssetLibrary& lib = *ctx.library;
    auto pick_from = [&](const std::vector<AssetRecord>& pool) -> const AssetRecord& {
        std::uniform_int_distribution<std::size_t> dist(0, pool.size() - 1);
        return pool[dist(rng)];
    };
    Selection sel;
    const auto servers = of_category(lib, Category::Server);
    if (servers.empty()) return std::nullopt;
    double pflops = 0.0;
    while (pflops < ctx.setup.compute_target_pflops) {
        if (sel.servers.size() >= 500) return std::nullopt;
        const AssetRecord& s = pick_from(servers);
        sel.servers.push_back(s.id);
        pflops += s.perf_at("petaflops");
    }
    const double load = it_load_w(sel.servers, lib, ctx.setup.utilization);
    auto cover = [&](Category c, std::vector<std::string>& out, double need) -> bool {
        const auto pool = of_category(lib, c);
        if (pool.empty()) return false;
        double cap = 0.0;
        while (cap < need) {
            if (out.size() >= 100) return false;
            const AssetRecord& a = pick_from(pool);
            out.push_back(a.id);
            cap += a.perf_at("capacity_w");
        }
        return true;
    };
    // CRAH and CDU are interchangeable air/liquid handlers here; pick one
    // random family per design.
    const Category handler = std::uniform_int_distribution<int>(0, 1)(rng) == 0
                                 ? Category::CRAH
                                 : Category::CDU;
    if (!cover(Category::Chiller, sel.chillers, load) ||
        !cover(handler, sel.air_liquid, load) ||
        !cover(Category::CoolingTower, sel.towers, load) ||
        !cover(Category::UPS, sel.ups, load) || !cover(Category::PDU, sel.pdu, load)) {
        return std::nullopt;
    }
    return sel;
}

// ---------------------------------------------------------------------------
// Mechanistic-model structures
// ---------------------------------------------------------------------------

TwinStructure make_coil_arch(const GenerationContext& ctx, Encoding ua_encoding,
                             bool residual, int hidden_width, Provenance prov) {
    ModelArch a;
    a.family = "coil_counterflow";
    a.params.push_back({"UA", ctx.setup.ua_lower, ctx.setup.ua_upper, ua_encoding});
    a.residual.enabled = residual;
    a.residual.hidden_width = hidden_width;
    a.nominal_water_flow = ctx.setup.nominal_water_flow;
    a.nominal_air_flow = ctx.setup.nominal_air_flow;
    TwinStructure s;
    s.kind = StructureKind::MechanisticModel;
    s.provenance = prov;
    s.body = std::move(a);
    return s;
}

TwinStructure random_coil_arch(std::mt19937_64& rng, const GenerationContext& ctx) {
    std::uniform_int_distribution<int> coin(0, 1);
    const int widths[] = {4, 8, 16};
    const int h = widths[std::uniform_int_distribution<int>(0, 2)(rng)];
    return make_coil_arch(ctx, coin(rng) ? Encoding::Log : Encoding::Linear, coin(rng) == 1, h,
                          Provenance::Seed);
}

TwinStructure mutate_model(std::mt19937_64& rng, const TwinStructure& parent,
                           const GenerationContext& ctx) {
    ModelArch a = parent.arch();
    switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
        case 0:
            a.residual.enabled = !a.residual.enabled;
            break;
        case 1:
            if (!a.residual.enabled) {
                a.residual.enabled = true;
            } else {
                a.residual.hidden_width = std::min(32, a.residual.hidden_width * 2);
            }
            break;
        default:
            for (auto& d : a.params) {
                if (d.name == "UA") {
                    d.encoding = d.encoding == Encoding::Log ? Encoding::Linear : Encoding::Log;
                }
            }
            break;
    }
    (void)ctx;
    TwinStructure s;
    s.kind = StructureKind::MechanisticModel;
    s.provenance = Provenance::Evolved;
    s.body = std::move(a);
    return s;
}

TwinStructure mutate_design(std::mt19937_64& rng, const TwinStructure& parent,
                            const GenerationContext& ctx) {
    EquipmentDesign d = parent.design();
    std::uniform_int_distribution<std::size_t> pick(0, d.placements.size() - 1);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    if (u01(rng) < 0.5) {
        // Swap one asset reference for a same-category library peer.
        Placement& p = d.placements[pick(rng)];
        const Category cat = ctx.library->find(p.asset_id).category;
        const auto pool = of_category(*ctx.library, cat);
        if (pool.size() > 1) {
            std::uniform_int_distribution<std::size_t> dist(0, pool.size() - 1);
            std::string replacement = p.asset_id;
            for (int tries = 0; tries < 10 && replacement == p.asset_id; ++tries) {
                replacement = pool[dist(rng)].id;
            }
            p.asset_id = replacement;
        }
    } else {
        // Nudge one placement by one cell.
        Placement& p = d.placements[pick(rng)];
        const int axis = std::uniform_int_distribution<int>(0, 1)(rng);
        const int dir = std::uniform_int_distribution<int>(0, 1)(rng) ? 1 : -1;
        (axis == 0 ? p.x : p.y) += dir;
    }
    TwinStructure s;
    s.kind = StructureKind::EquipmentDesign;
    s.provenance = Provenance::Evolved;
    s.body = std::move(d);
    return s;
}

}  // namespace

std::optional<std::string> proposal_violation(const TwinStructure& s,
                                              const GenerationContext& ctx) {
    const auto structural = s.structural_violations();
    if (!structural.empty()) {
        std::string msg;
        for (const auto& v : structural) {
            if (!msg.empty()) msg += "; ";
            msg += v;
        }
        return msg;
    }
    if (s.kind == StructureKind::EquipmentDesign) {
        if (!ctx.library) return "no asset library loaded";
        const ValidationReport report = validate_design(s, *ctx.library);
        if (!report.valid()) return report.summary();
    } else {
        const ModelArch& a = s.arch();
        if (a.family == "coil_counterflow") {
            const bool has_ua = std::any_of(a.params.begin(), a.params.end(),
                                            [](const ParamDecl& d) { return d.name == "UA"; });
            if (!has_ua) return "coil_counterflow model must declare a 'UA' parameter";
        }
    }
    return std::nullopt;
}

std::vector<TwinStructure> propose_evolutionary(const GenerationContext& ctx) {
    std::mt19937_64 rng(ctx.seed + static_cast<std::uint64_t>(ctx.iteration) * 0x9e3779b9ull);
    std::vector<TwinStructure> out;
    std::set<std::string> digests;

    auto random_structure = [&]() -> std::optional<TwinStructure> {
        if (ctx.setup.kind == StructureKind::MechanisticModel) {
            return random_coil_arch(rng, ctx);
        }
        auto sel = random_selection(rng, ctx);
        if (!sel) return std::nullopt;
        try {
            return design_from_selection(*sel, ctx, Provenance::Seed);
        } catch (const DomainError&) {
            return std::nullopt;
        }
    };

    if (ctx.iteration == 0 || ctx.feedback.empty()) {
        while (static_cast<int>(out.size()) < ctx.population) {
            bool added = false;
            for (int attempt = 0; attempt < 20; ++attempt) {
                auto s = random_structure();
                if (!s || proposal_violation(*s, ctx)) continue;
                if (!digests.insert(s->digest()).second) continue;
                out.push_back(std::move(*s));
                added = true;
                break;
            }
            if (!added) {
                // Library too small for more distinct candidates; accept
                // duplicates rather than spinning forever.
                auto s = random_structure();
                if (s && !proposal_violation(*s, ctx)) {
                    out.push_back(std::move(*s));
                } else {
                    break;
                }
            }
        }
        return out;
    }

    // Children of the top-K parents, round-robin until the population is full.
    std::size_t parent_idx = 0;
    while (static_cast<int>(out.size()) < ctx.population) {
        const TwinStructure& parent = ctx.feedback[parent_idx % ctx.feedback.size()].structure;
        ++parent_idx;
        TwinStructure child = parent;
        bool valid = false;
        for (int attempt = 0; attempt < 20; ++attempt) {
            child = ctx.setup.kind == StructureKind::MechanisticModel
                        ? mutate_model(rng, parent, ctx)
                        : mutate_design(rng, parent, ctx);
            if (!proposal_violation(child, ctx)) {
                valid = true;
                break;
            }
        }
        if (!valid) {
            child = parent;  // resampling exhausted, clone the parent
            child.provenance = Provenance::Evolved;
        }
        out.push_back(std::move(child));
    }
    return out;
}

namespace {

double chiller_mean_cop(const AssetRecord& r, double mean_wb) {
    return std::clamp(r.perf_at("cop_c0") - r.perf_at("cop_c1") * mean_wb, 1.0, 12.0);
}

Selection greedy_selection(const GenerationContext& ctx) {
    const AssetLibrary& lib = *ctx.library;
    Selection sel;

    auto servers = of_category(lib, Category::Server);
    if (servers.empty()) {
        throw InfeasibleTarget("library has no servers");
    }
    std::sort(servers.begin(), servers.end(), [](const AssetRecord& a, const AssetRecord& b) {
        const double ea = a.perf.at("petaflops") / a.perf.at("power_w");
        const double eb = b.perf.at("petaflops") / b.perf.at("power_w");
        if (ea != eb) return ea > eb;
        return a.id < b.id;
    });
    double pflops = 0.0;
    while (pflops < ctx.setup.compute_target_pflops) {
        if (sel.servers.size() >= 500) {
            throw InfeasibleTarget("compute target unreachable with library servers");
        }
        sel.servers.push_back(servers.front().id);
        pflops += servers.front().perf_at("petaflops");
    }
    const double load = it_load_w(sel.servers, lib, ctx.setup.utilization);
    const double mean_wb =
        ctx.weather ? find_profile(*ctx.weather, ctx.setup.site_id).mean_wetbulb() : 20.0;

    auto cover_best = [&](std::vector<AssetRecord> pool, std::vector<std::string>& out,
                          double need, auto better) {
        std::sort(pool.begin(), pool.end(), better);
        if (pool.empty()) {
            throw InfeasibleTarget("library category empty");
        }
        double cap = 0.0;
        while (cap < need) {
            if (out.size() >= 100) {
                throw InfeasibleTarget("cooling capacity unreachable");
            }
            out.push_back(pool.front().id);
            cap += pool.front().perf_at("capacity_w");
        }
    };
    cover_best(of_category(lib, Category::Chiller), sel.chillers, load,
               [&](const AssetRecord& a, const AssetRecord& b) {
                   const double ca = chiller_mean_cop(a, mean_wb);
                   const double cb = chiller_mean_cop(b, mean_wb);
                   if (ca != cb) return ca > cb;
                   return a.id < b.id;
               });
    // Air/liquid handlers and towers: least parasitic power per W of capacity.
    auto per_cap = [](const AssetRecord& r) {
        const char* key = r.category == Category::CDU ? "pump_power_w" : "fan_power_w";
        return r.perf.at(key) / r.perf.at("capacity_w");
    };
    auto handlers = of_category(lib, Category::CRAH);
    const auto cdus = of_category(lib, Category::CDU);
    handlers.insert(handlers.end(), cdus.begin(), cdus.end());
    cover_best(handlers, sel.air_liquid, load,
               [&](const AssetRecord& a, const AssetRecord& b) {
                   if (per_cap(a) != per_cap(b)) return per_cap(a) < per_cap(b);
                   return a.id < b.id;
               });
    cover_best(of_category(lib, Category::CoolingTower), sel.towers, load,
               [&](const AssetRecord& a, const AssetRecord& b) {
                   if (per_cap(a) != per_cap(b)) return per_cap(a) < per_cap(b);
                   return a.id < b.id;
               });
    auto by_eff = [](const AssetRecord& a, const AssetRecord& b) {
        if (a.perf.at("efficiency") != b.perf.at("efficiency")) {
            return a.perf.at("efficiency") > b.perf.at("efficiency");
        }
        return a.id < b.id;
    };
    cover_best(of_category(lib, Category::UPS), sel.ups, load, by_eff);
    cover_best(of_category(lib, Category::PDU), sel.pdu, load, by_eff);
    return sel;
}

// Upgrade the category contributing most to non-IT power in the best
// previous candidate; falls through to the next category when the best
// option is already in use.
std::optional<TwinStructure> upgrade_best_design(const GenerationContext& ctx) {
    if (ctx.feedback.empty()) return std::nullopt;
    const CandidateRecord& best = ctx.feedback.front();
    if (best.structure.kind != StructureKind::EquipmentDesign) return std::nullopt;
    const AssetLibrary& lib = *ctx.library;
    Selection sel = selection_of(best.structure.design(), lib);

    json breakdown;
    try {
        breakdown = json::parse(best.notes);
    } catch (...) {
        return std::nullopt;
    }
    std::vector<std::pair<double, std::string>> contributions = {
        {breakdown.value("chiller_power_w", 0.0), "chiller"},
        {breakdown.value("fan_pump_power_w", 0.0), "fanpump"},
        {breakdown.value("ups_loss_w", 0.0), "ups"},
        {breakdown.value("pdu_loss_w", 0.0), "pdu"},
    };
    std::sort(contributions.begin(), contributions.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    const double mean_wb =
        ctx.weather ? find_profile(*ctx.weather, ctx.setup.site_id).mean_wetbulb() : 20.0;
    const double load = it_load_w(sel.servers, lib, ctx.setup.utilization);

    auto replace_with = [&](std::vector<std::string>& slot, std::vector<AssetRecord> pool,
                            auto better, auto score) -> bool {
        if (pool.empty() || slot.empty()) return false;
        std::sort(pool.begin(), pool.end(), better);
        double best_current = -1e300;
        for (const auto& id : slot) {
            best_current = std::max(best_current, score(lib.find(id)));
        }
        if (score(pool.front()) <= best_current) return false;  // already optimal
        std::vector<std::string> replacement;
        double cap = 0.0;
        while (cap < load && replacement.size() < 100) {
            replacement.push_back(pool.front().id);
            cap += pool.front().perf_at("capacity_w");
        }
        if (cap < load) return false;
        slot = std::move(replacement);
        return true;
    };

    for (const auto& [value, what] : contributions) {
        bool changed = false;
        if (what == "chiller") {
            auto score = [&](const AssetRecord& r) { return chiller_mean_cop(r, mean_wb); };
            changed = replace_with(sel.chillers, of_category(lib, Category::Chiller),
                                   [&](const AssetRecord& a, const AssetRecord& b) {
                                       if (score(a) != score(b)) return score(a) > score(b);
                                       return a.id < b.id;
                                   },
                                   score);
        } else if (what == "fanpump") {
            auto score = [](const AssetRecord& r) {
                const char* key = r.category == Category::CDU ? "pump_power_w" : "fan_power_w";
                return -(r.perf.at(key) / r.perf.at("capacity_w"));
            };
            auto pool = of_category(lib, Category::CRAH);
            const auto cdus = of_category(lib, Category::CDU);
            pool.insert(pool.end(), cdus.begin(), cdus.end());
            changed = replace_with(sel.air_liquid, std::move(pool),
                                   [&](const AssetRecord& a, const AssetRecord& b) {
                                       if (score(a) != score(b)) return score(a) > score(b);
                                       return a.id < b.id;
                                   },
                                   score);
        } else {
            auto score = [](const AssetRecord& r) { return r.perf.at("efficiency"); };
            auto& slot = what == "ups" ? sel.ups : sel.pdu;
            changed = replace_with(slot,
                                   of_category(lib, what == "ups" ? Category::UPS : Category::PDU),
                                   [&](const AssetRecord& a, const AssetRecord& b) {
                                       if (score(a) != score(b)) return score(a) > score(b);
                                       return a.id < b.id;
                                   },
                                   score);
        }
        if (changed) {
            try {
                return design_from_selection(sel, ctx, Provenance::Evolved);
            } catch (const DomainError&) {
                return std::nullopt;
            }
        }
    }
    return std::nullopt;
}

}  // namespace

std::vector<TwinStructure> propose_scripted(const GenerationContext& ctx) {
    if (!ctx.library && ctx.setup.kind == StructureKind::EquipmentDesign) {
        throw ConfigError("propose_scripted: no asset library loaded");
    }
    std::vector<TwinStructure> out;
    if (ctx.setup.kind == StructureKind::MechanisticModel) {
        // Staged refinement mirroring the augmentations the outer loop is
        // expected to discover: white-box first, then log re-parameterization
        // with a residual corrector, then wider correctors.
        TwinStructure s = [&] {
            if (ctx.iteration == 0 || ctx.feedback.empty()) {
                return make_coil_arch(ctx, Encoding::Linear, false, 8, Provenance::Generated);
            }
            const int stage = std::min(ctx.iteration, 3);
            return make_coil_arch(ctx, Encoding::Log, true, 8 * stage, Provenance::Generated);
        }();
        if (!proposal_violation(s, ctx)) {
            out.push_back(std::move(s));
        }
        return out;
    }

    TwinStructure proposal = [&] {
        if (ctx.iteration > 0) {
            if (auto upgraded = upgrade_best_design(ctx)) {
                return std::move(*upgraded);
            }
            if (!ctx.feedback.empty() &&
                ctx.feedback.front().structure.kind == StructureKind::EquipmentDesign) {
                TwinStructure keep = ctx.feedback.front().structure;
                keep.provenance = Provenance::Generated;
                return keep;
            }
        }
        return design_from_selection(greedy_selection(ctx), ctx, Provenance::Generated);
    }();
    if (auto why = proposal_violation(proposal, ctx)) {
        throw DomainError("scripted proposal failed validation: " + *why);
    }
    out.push_back(std::move(proposal));
    return out;
}

const std::string& schema_reference() {
    static const std::string ref = R"(Document: one JSON object, schema id "fusion-twin/structure-v1".
Common fields:
  schema:      "fusion-twin/structure-v1"
  provenance:  "seed" | "evolved" | "generated"
  kind:        "equipment_design" | "mechanistic_model"
kind = equipment_design:
  site:        weather location id (string)
  grid:        {width:int>=4, depth:int>=4, clearance:int>=1, alternate_aisles:bool}
  placements:  [{asset:string, x:int>=0, y:int>=0, orientation:"north"|"south"}, ...]
  params:      [] (optional setpoint declarations)
kind = mechanistic_model:
  family:      "coil_counterflow"
  params:      [{name:string, lower:number, upper:number, encoding:"linear"|"log"}, ...]
               (must declare "UA"; log encoding requires lower > 0)
  residual:    {enabled:bool, hidden_width:int>=1}
  nominal:     {water_flow_kgs:number>0, air_flow_kgs:number>0}
Unknown fields are rejected. Rack rows must keep `clearance` empty rows
between them and alternate orientation row by row.)";
    return ref;
}

std::string build_prompt(const GenerationContext& ctx) {
    std::string p;
    p += "== Objective ==\n" + ctx.initial_prompt + "\n";
    p += "== Target schema ==\n" + schema_reference() + "\n";
    if (ctx.library) {
        p += "== Available assets ==\n";
        for (const auto& r : ctx.library->records()) {
            p += r.id + " " + category_name(r.category);
            for (const auto& [k, v] : r.perf) {
                p += " " + k + "=" + fmt_num(v);
            }
            p += " footprint=" + std::to_string(r.footprint_w) + "x" +
                 std::to_string(r.footprint_d) + "\n";
        }
    }
    if (ctx.weather) {
        p += "== Weather sites ==\n";
        for (const auto& w : *ctx.weather) {
            p += w.location_id + " " + climate_name(w.climate) +
                 " mean_wetbulb_c=" + fmt_num(w.mean_wetbulb()) + "\n";
        }
    }
    if (!ctx.feedback.empty()) {
        p += "== Feedback: top candidates from iteration " + std::to_string(ctx.iteration - 1) +
             ", best first ==\n";
        for (const auto& c : ctx.feedback) {
            p += "outer_cost=" + fmt_num(c.outer_cost) + " inner_cost=" + fmt_num(c.inner_cost) +
                 " digest=" + c.structure.digest();
            std::string params;
            for (const auto& e : c.fitted_params.entries) {
                if (!params.empty()) params += ",";
                params += e.name + "=" + fmt_num(e.value);
            }
            p += " params={" + params + "}";
            p += " structure=" + structure_to_json(c.structure).dump() + "\n";
        }
    }
    p += "== Instruction ==\n";
    p += "Propose one improved candidate. Respond with exactly one fenced ```json block "
         "containing a single schema-valid structure document and nothing else.\n";
    return p;
}

LlmProposalResult propose_llm(const GenerationContext& ctx, const LlmEndpointConfig& endpoint) {
    LlmProposalResult result;
    std::string prompt = build_prompt(ctx);
    const int attempts = 1 + std::max(0, endpoint.retries);

    for (int attempt = 0; attempt < attempts; ++attempt) {
        result.retries_used = attempt;
        std::string reply;
        try {
            reply = chat_completion(endpoint, prompt);
        } catch (const TransportError& e) {
            result.diagnostics.push_back(std::string("transport: ") + e.what());
            if (endpoint.fallback_to_scripted) {
                result.structures = propose_scripted(ctx);
                result.degraded_to_scripted = true;
                return result;
            }
            throw;
        }
        const DocumentBlock block = extract_document_block(reply);
        if (block.multiple_blocks) {
            result.diagnostics.push_back("multiple fenced blocks in reply; using the first");
        }
        std::string error;
        try {
            const json doc = json::parse(block.content);
            TwinStructure s = structure_from_json(doc);
            if (auto why = proposal_violation(s, ctx)) {
                error = *why;
            } else {
                result.structures.push_back(std::move(s));
                return result;
            }
        } catch (const std::exception& e) {
            error = e.what();
        }
        result.diagnostics.push_back("attempt " + std::to_string(attempt) + " rejected: " + error);
        prompt += "\n== Previous attempt rejected ==\n" + error +
                  "\nReturn a corrected, schema-valid document.\n";
    }
    if (endpoint.fallback_to_scripted) {
        result.structures = propose_scripted(ctx);
        result.degraded_to_scripted = true;
        return result;
    }
    throw AllCandidatesInvalid("every LLM attempt produced an invalid structure");
}

std::vector<CandidateRecord> select_top_k(std::vector<CandidateRecord> evaluated, int k) {
    if (k < 1) {
        throw DomainError("select_top_k: K must be >= 1");
    }
    std::sort(evaluated.begin(), evaluated.end(), candidate_less);
    if (static_cast<int>(evaluated.size()) > k) {
        evaluated.resize(static_cast<std::size_t>(k));
    }
    return evaluated;
}

}  // namespace fusion
