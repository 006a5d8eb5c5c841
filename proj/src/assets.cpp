#include "fusion/assets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "fusion/serialize.hpp"

namespace fusion {

using nlohmann::json;

std::string category_name(Category c) {
    switch (c) {
        case Category::Server: return "server";
        case Category::Chiller: return "chiller";
        case Category::CRAH: return "crah";
        case Category::CDU: return "cdu";
        case Category::CoolingTower: return "cooling_tower";
        case Category::UPS: return "ups";
        case Category::PDU: return "pdu";
    }
    return "server";
}

Category category_from_name(const std::string& s) {
    if (s == "server") return Category::Server;
    if (s == "chiller") return Category::Chiller;
    if (s == "crah") return Category::CRAH;
    if (s == "cdu") return Category::CDU;
    if (s == "cooling_tower") return Category::CoolingTower;
    if (s == "ups") return Category::UPS;
    if (s == "pdu") return Category::PDU;
    throw SchemaError({"unknown asset category: " + s});
}

double AssetRecord::perf_at(const std::string& key) const {
    auto it = perf.find(key);
    if (it == perf.end()) {
        throw UnknownVariable("asset '" + id + "' has no perf field '" + key + "'");
    }
    return it->second;
}

double chiller_cop(const AssetRecord& chiller, double wetbulb_c) {
    const double cop = chiller.perf_at("cop_c0") - chiller.perf_at("cop_c1") * wetbulb_c;
    return std::clamp(cop, 1.0, 12.0);
}

namespace {

const std::map<Category, std::vector<std::string>>& perf_schema() {
    static const std::map<Category, std::vector<std::string>> schema = {
        {Category::Server, {"petaflops", "power_w"}},
        {Category::Chiller, {"capacity_w", "cop_c0", "cop_c1"}},
        {Category::CRAH, {"capacity_w", "fan_power_w"}},
        {Category::CDU, {"capacity_w", "pump_power_w"}},
        {Category::CoolingTower, {"capacity_w", "fan_power_w"}},
        {Category::UPS, {"capacity_w", "efficiency"}},
        {Category::PDU, {"capacity_w", "efficiency"}},
    };
    return schema;
}

void check_record(const AssetRecord& r, std::vector<std::string>& bad) {
    const auto& expected = perf_schema().at(r.category);
    for (const auto& key : expected) {
        if (!r.perf.count(key)) {
            bad.push_back("asset '" + r.id + "': missing perf field '" + key + "'");
        }
    }
    for (const auto& [k, v] : r.perf) {
        if (std::find(expected.begin(), expected.end(), k) == expected.end()) {
            bad.push_back("asset '" + r.id + "': unknown perf field '" + k + "'");
            continue;
        }
        if (!std::isfinite(v)) {
            bad.push_back("asset '" + r.id + "': non-finite perf field '" + k + "'");
            continue;
        }
        if (k == "efficiency") {
            if (!(v > 0.0 && v <= 1.0)) {
                bad.push_back("asset '" + r.id + "': efficiency must be in (0, 1]");
            }
        } else if (k == "cop_c1") {
            if (v < 0.0) {
                bad.push_back("asset '" + r.id + "': cop_c1 must be >= 0");
            }
        } else if (!(v > 0.0)) {
            bad.push_back("asset '" + r.id + "': perf field '" + k + "' must be > 0");
        }
    }
    if (r.category == Category::Chiller && r.perf.count("cop_c0") && r.perf.count("cop_c1")) {
        // COP must stay positive over wet-bulb in [5, 35] °C before clamping.
        if (r.perf.at("cop_c0") - r.perf.at("cop_c1") * 35.0 <= 0.0) {
            bad.push_back("asset '" + r.id + "': COP curve non-positive at 35 °C wet-bulb");
        }
    }
    if (r.footprint_w < 1 || r.footprint_d < 1) {
        bad.push_back("asset '" + r.id + "': footprint must be at least 1x1");
    }
    if (!(r.cost_index > 0.0)) {
        bad.push_back("asset '" + r.id + "': cost_index must be > 0");
    }
}

}  // namespace

AssetLibrary::AssetLibrary(std::vector<AssetRecord> records) : records_(std::move(records)) {
    std::sort(records_.begin(), records_.end(),
              [](const AssetRecord& a, const AssetRecord& b) { return a.id < b.id; });
    std::vector<std::string> bad;
    std::set<std::string> ids;
    for (const auto& r : records_) {
        if (r.id.empty()) {
            bad.push_back("asset with empty id");
        } else if (!ids.insert(r.id).second) {
            bad.push_back("duplicate asset id: " + r.id);
        }
        check_record(r, bad);
    }
    if (!bad.empty()) {
        throw SchemaError(bad);
    }
}

const AssetRecord& AssetLibrary::find(const std::string& id) const {
    if (const AssetRecord* r = try_find(id)) {
        return *r;
    }
    throw UnresolvedAsset("asset not found: " + id);
}

const AssetRecord* AssetLibrary::try_find(const std::string& id) const {
    auto it = std::lower_bound(records_.begin(), records_.end(), id,
                               [](const AssetRecord& r, const std::string& k) { return r.id < k; });
    if (it != records_.end() && it->id == id) {
        return &*it;
    }
    return nullptr;
}

std::vector<AssetRecord> query(const AssetLibrary& lib, const AssetFilter& filter) {
    std::vector<AssetRecord> out;
    for (const auto& r : lib.records()) {
        if (filter.category && r.category != *filter.category) continue;
        bool keep = true;
        for (const auto& [k, v] : filter.min_perf) {
            auto it = r.perf.find(k);
            if (it == r.perf.end() || it->second < v) {
                keep = false;
                break;
            }
        }
        if (!keep) continue;
        for (const auto& [k, v] : filter.max_perf) {
            auto it = r.perf.find(k);
            if (it == r.perf.end() || it->second > v) {
                keep = false;
                break;
            }
        }
        if (keep) out.push_back(r);
    }
    return out;
}

std::string climate_name(ClimateTag c) {
    switch (c) {
        case ClimateTag::Tropical: return "tropical";
        case ClimateTag::Arid: return "arid";
        case ClimateTag::Temperate: return "temperate";
        case ClimateTag::Continental: return "continental";
        case ClimateTag::Polar: return "polar";
    }
    return "temperate";
}

ClimateTag climate_from_name(const std::string& s) {
    if (s == "tropical") return ClimateTag::Tropical;
    if (s == "arid") return ClimateTag::Arid;
    if (s == "temperate") return ClimateTag::Temperate;
    if (s == "continental") return ClimateTag::Continental;
    if (s == "polar") return ClimateTag::Polar;
    throw SchemaError({"unknown climate tag: " + s});
}

double WeatherProfile::mean_wetbulb() const {
    if (wetbulb_c.empty()) return 0.0;
    return std::accumulate(wetbulb_c.begin(), wetbulb_c.end(), 0.0) /
           static_cast<double>(wetbulb_c.size());
}

AssetLibrary load_library(const std::string& path) {
    const json j = load_json_file(path);
    std::vector<std::string> bad;
    if (!j.is_object() || !j.contains("schema") || j["schema"] != kAssetsSchema) {
        throw SchemaError({"asset library: missing or wrong schema id (want " +
                           std::string(kAssetsSchema) + ")"});
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() != "schema" && it.key() != "assets") {
            bad.push_back("asset library: unknown field '" + it.key() + "'");
        }
    }
    if (!j.contains("assets") || !j["assets"].is_array()) {
        bad.push_back("asset library: missing 'assets' array");
        throw SchemaError(bad);
    }
    std::vector<AssetRecord> records;
    for (std::size_t i = 0; i < j["assets"].size(); ++i) {
        const json& a = j["assets"][i];
        const std::string where = "assets[" + std::to_string(i) + "]";
        if (!a.is_object()) {
            bad.push_back(where + ": expected an object");
            continue;
        }
        AssetRecord r;
        try {
            r.id = a.at("id").get<std::string>();
            r.category = category_from_name(a.at("category").get<std::string>());
            r.perf = a.at("perf").get<std::map<std::string, double>>();
            r.footprint_w = a.at("footprint_w").get<int>();
            r.footprint_d = a.at("footprint_d").get<int>();
            r.cost_index = a.at("cost_index").get<double>();
        } catch (const std::exception& e) {
            bad.push_back(where + ": " + e.what());
            continue;
        }
        for (auto it = a.begin(); it != a.end(); ++it) {
            static const std::set<std::string> known = {"id",          "category",    "perf",
                                                        "footprint_w", "footprint_d", "cost_index"};
            if (!known.count(it.key())) {
                bad.push_back(where + ": unknown field '" + it.key() + "'");
            }
        }
        records.push_back(std::move(r));
    }
    if (!bad.empty()) {
        throw SchemaError(bad);
    }
    return AssetLibrary(std::move(records));
}

void save_library(const std::string& path, const AssetLibrary& lib) {
    json j;
    j["schema"] = kAssetsSchema;
    json arr = json::array();
    for (const auto& r : lib.records()) {
        arr.push_back({{"id", r.id},
                       {"category", category_name(r.category)},
                       {"perf", json(r.perf)},
                       {"footprint_w", r.footprint_w},
                       {"footprint_d", r.footprint_d},
                       {"cost_index", r.cost_index}});
    }
    j["assets"] = arr;
    save_json_file(path, j);
}

std::vector<WeatherProfile> load_weather(const std::string& path) {
    const json j = load_json_file(path);
    std::vector<std::string> bad;
    if (!j.is_object() || !j.contains("schema") || j["schema"] != kWeatherSchema) {
        throw SchemaError({"weather: missing or wrong schema id (want " +
                           std::string(kWeatherSchema) + ")"});
    }
    if (!j.contains("profiles") || !j["profiles"].is_array()) {
        throw SchemaError({"weather: missing 'profiles' array"});
    }
    std::vector<WeatherProfile> out;
    for (std::size_t i = 0; i < j["profiles"].size(); ++i) {
        const json& p = j["profiles"][i];
        const std::string where = "profiles[" + std::to_string(i) + "]";
        WeatherProfile w;
        std::size_t declared = 0;
        try {
            w.location_id = p.at("location").get<std::string>();
            w.climate = climate_from_name(p.at("climate").get<std::string>());
            declared = p.at("length").get<std::size_t>();
            w.wetbulb_c = p.at("wetbulb_c").get<std::vector<double>>();
            w.drybulb_c = p.at("drybulb_c").get<std::vector<double>>();
        } catch (const std::exception& e) {
            bad.push_back(where + ": " + e.what());
            continue;
        }
        if (declared != 8760 && declared != 288) {
            bad.push_back(where + ": declared length must be 8760 or 288");
        }
        if (w.wetbulb_c.size() != declared || w.drybulb_c.size() != declared) {
            bad.push_back(where + ": series length does not match declared length");
        }
        for (std::size_t h = 0; h < std::min(w.wetbulb_c.size(), w.drybulb_c.size()); ++h) {
            if (w.wetbulb_c[h] > w.drybulb_c[h]) {
                bad.push_back(where + ": wet-bulb exceeds dry-bulb at hour " + std::to_string(h));
                break;
            }
        }
        out.push_back(std::move(w));
    }
    if (!bad.empty()) {
        throw SchemaError(bad);
    }
    return out;
}

void save_weather(const std::string& path, const std::vector<WeatherProfile>& profiles) {
    json j;
    j["schema"] = kWeatherSchema;
    json arr = json::array();
    for (const auto& w : profiles) {
        arr.push_back({{"location", w.location_id},
                       {"climate", climate_name(w.climate)},
                       {"length", w.wetbulb_c.size()},
                       {"wetbulb_c", w.wetbulb_c},
                       {"drybulb_c", w.drybulb_c}});
    }
    j["profiles"] = arr;
    save_json_file(path, j);
}

const WeatherProfile& find_profile(const std::vector<WeatherProfile>& profiles,
                                   const std::string& id) {
    for (const auto& p : profiles) {
        if (p.location_id == id) return p;
    }
    throw UnresolvedAsset("weather profile not found: " + id);
}

std::string ValidationReport::summary() const {
    std::string s;
    for (const auto& v : violations) {
        if (!s.empty()) s += "; ";
        s += v.code + ": " + v.message;
    }
    return s;
}

ValidationReport validate_layout(const EquipmentDesign& design, const AssetLibrary& lib) {
    ValidationReport report;
    std::map<std::pair<int, int>, std::string> occupied;

    struct ServerRow {
        int y;
        std::set<int> orientations;  // 0 north, 1 south
    };
    std::map<int, ServerRow> server_rows;

    for (const auto& p : design.placements) {
        const AssetRecord* asset = lib.try_find(p.asset_id);
        if (!asset) {
            report.violations.push_back({"unresolved", "asset '" + p.asset_id + "' not in library",
                                         p.x, p.y});
            continue;
        }
        const int w = asset->footprint_w;
        const int d = asset->footprint_d;
        if (p.x < 0 || p.y < 0 || p.x + w > design.grid.width || p.y + d > design.grid.depth) {
            report.violations.push_back({"out_of_bounds",
                                         "placement of '" + p.asset_id + "' leaves the hall grid",
                                         p.x, p.y});
            continue;
        }
        for (int dx = 0; dx < w; ++dx) {
            for (int dy = 0; dy < d; ++dy) {
                auto cell = std::make_pair(p.x + dx, p.y + dy);
                auto [it, inserted] = occupied.emplace(cell, p.asset_id);
                if (!inserted) {
                    report.violations.push_back({"overlap",
                                                 "'" + p.asset_id + "' overlaps '" + it->second +
                                                     "' at cell",
                                                 cell.first, cell.second});
                }
            }
        }
        if (asset->category == Category::Server) {
            auto& row = server_rows[p.y];
            row.y = p.y;
            row.orientations.insert(p.orientation == Orientation::North ? 0 : 1);
        }
    }

    // Rack rows must be separated by at least `clearance` empty rows.
    int prev_y = -1;
    int prev_orient = -1;
    for (const auto& [y, row] : server_rows) {
        if (row.orientations.size() > 1 && design.grid.alternate_aisles) {
            report.violations.push_back({"mixed_row_orientation",
                                         "rack row has mixed orientations", -1, y});
        }
        if (prev_y >= 0) {
            const int gap = y - prev_y - 1;
            if (gap < design.grid.clearance) {
                report.violations.push_back({"clearance",
                                             "rack rows at y=" + std::to_string(prev_y) + " and y=" +
                                                 std::to_string(y) + " closer than clearance",
                                             -1, y});
            }
            if (design.grid.alternate_aisles && row.orientations.size() == 1 && prev_orient >= 0 &&
                *row.orientations.begin() == prev_orient) {
                report.violations.push_back({"aisle_alternation",
                                             "consecutive rack rows share orientation", -1, y});
            }
        }
        prev_y = y;
        prev_orient = row.orientations.size() == 1 ? *row.orientations.begin() : -1;
    }
    return report;
}

ValidationReport validate_design(const TwinStructure& s, const AssetLibrary& lib) {
    ValidationReport report;
    for (const auto& msg : s.structural_violations()) {
        report.violations.push_back({"structural", msg, -1, -1});
    }
    if (s.kind != StructureKind::EquipmentDesign) {
        report.violations.push_back({"kind", "structure is not an equipment design", -1, -1});
        return report;
    }
    if (!report.valid()) {
        return report;
    }
    ValidationReport layout = validate_layout(s.design(), lib);
    report.violations.insert(report.violations.end(), layout.violations.begin(),
                             layout.violations.end());
    return report;
}

}  // namespace fusion
