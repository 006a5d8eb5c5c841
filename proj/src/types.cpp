#include "fusion/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fusion/serialize.hpp"

namespace fusion {

void TimeSeriesDataset::validate() const {
    std::vector<std::string> bad;
    if (records.size() < 2) {
        bad.push_back("dataset must contain at least 2 records");
    }
    if (!(split_index > 0 && split_index < records.size())) {
        bad.push_back("split_index must satisfy 0 < split_index < T");
    }
    std::set<std::string> state_vars;
    std::set<std::string> action_vars;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const Record& r = records[i];
        if (r.state.timestamp != static_cast<int>(i)) {
            bad.push_back("timestamp at index " + std::to_string(i) + " is not " +
                          std::to_string(i));
        }
        for (const auto& [k, v] : r.state.values) {
            if (!std::isfinite(v)) {
                bad.push_back("non-finite state value '" + k + "' at t=" + std::to_string(i));
            }
        }
        for (const auto& [k, v] : r.action.values) {
            if (!std::isfinite(v)) {
                bad.push_back("non-finite action value '" + k + "' at t=" + std::to_string(i));
            }
        }
        auto keys = [](const std::map<std::string, double>& m) {
            std::set<std::string> s;
            for (const auto& [k, _] : m) s.insert(k);
            return s;
        };
        if (i == 0) {
            state_vars = keys(r.state.values);
            action_vars = keys(r.action.values);
        } else {
            if (keys(r.state.values) != state_vars) {
                bad.push_back("state variable set differs at t=" + std::to_string(i));
            }
            if (keys(r.action.values) != action_vars) {
                bad.push_back("action variable set differs at t=" + std::to_string(i));
            }
        }
    }
    if (!bad.empty()) {
        throw SchemaError(bad);
    }
}

double ParameterVector::get(const std::string& name) const {
    for (const auto& e : entries) {
        if (e.name == name) return e.value;
    }
    throw UnknownVariable("parameter not found: " + name);
}

bool ParameterVector::has(const std::string& name) const {
    return std::any_of(entries.begin(), entries.end(),
                       [&](const ParamEntry& e) { return e.name == name; });
}

void ParameterVector::set(const std::string& name, double v) {
    for (auto& e : entries) {
        if (e.name == name) {
            e.value = v;
            return;
        }
    }
    throw UnknownVariable("parameter not found: " + name);
}

void ParameterVector::validate() const {
    std::vector<std::string> bad;
    std::set<std::string> names;
    for (const auto& e : entries) {
        if (!names.insert(e.name).second) {
            bad.push_back("duplicate parameter name: " + e.name);
        }
        if (!(e.lower <= e.value && e.value <= e.upper)) {
            bad.push_back("parameter '" + e.name + "' outside bounds");
        }
        if (e.encoding == Encoding::Log && !(e.lower > 0.0)) {
            bad.push_back("log-encoded parameter '" + e.name + "' requires lower > 0");
        }
        if (!std::isfinite(e.value)) {
            bad.push_back("parameter '" + e.name + "' non-finite");
        }
    }
    if (!bad.empty()) {
        throw SchemaError(bad);
    }
}

void ParameterVector::project() {
    for (auto& e : entries) {
        e.value = std::clamp(e.value, e.lower, e.upper);
    }
}

std::vector<ParamDecl> TwinStructure::parameter_decls() const {
    if (kind == StructureKind::EquipmentDesign) {
        return design().params;
    }
    const ModelArch& a = arch();
    std::vector<ParamDecl> decls = a.params;
    if (a.residual.enabled) {
        const std::size_t n = static_cast<std::size_t>(7 * a.residual.hidden_width + 2);
        decls.reserve(decls.size() + n);
        for (std::size_t i = 0; i < n; ++i) {
            decls.push_back({"rw." + std::to_string(i), -10.0, 10.0, Encoding::Linear});
        }
    }
    return decls;
}

std::string TwinStructure::digest() const {
    // FNV-1a over the canonical serialized form.
    const std::string s = structure_to_json(*this).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = hex[h & 0xf];
        h >>= 4;
    }
    buf[16] = '\0';
    return std::string(buf);
}

std::vector<std::string> TwinStructure::structural_violations() const {
    std::vector<std::string> bad;
    auto check_decls = [&](const std::vector<ParamDecl>& decls) {
        std::set<std::string> names;
        for (const auto& d : decls) {
            if (!names.insert(d.name).second) {
                bad.push_back("duplicate parameter declaration: " + d.name);
            }
            if (!(d.lower < d.upper)) {
                bad.push_back("parameter '" + d.name + "' has lower >= upper");
            }
            if (d.encoding == Encoding::Log && !(d.lower > 0.0)) {
                bad.push_back("log-encoded parameter '" + d.name + "' requires lower > 0");
            }
        }
    };
    if (kind == StructureKind::EquipmentDesign) {
        const EquipmentDesign& d = design();
        if (d.grid.width < 4 || d.grid.depth < 4) {
            bad.push_back("hall grid must be at least 4x4");
        }
        if (d.grid.clearance < 1) {
            bad.push_back("aisle clearance must be >= 1");
        }
        if (d.site_id.empty()) {
            bad.push_back("design has no site reference");
        }
        if (d.placements.empty()) {
            bad.push_back("design has no placements");
        }
        for (const auto& p : d.placements) {
            if (p.x < 0 || p.y < 0) {
                bad.push_back("placement of '" + p.asset_id + "' has negative coordinates");
            }
            if (p.asset_id.empty()) {
                bad.push_back("placement with empty asset reference");
            }
        }
        check_decls(d.params);
    } else {
        const ModelArch& a = arch();
        if (a.family != "coil_counterflow" && a.family != "identity") {
            bad.push_back("unknown model family: " + a.family);
        }
        if (a.residual.enabled && a.residual.hidden_width < 1) {
            bad.push_back("residual hidden width must be >= 1");
        }
        if (!(a.nominal_water_flow > 0.0) || !(a.nominal_air_flow > 0.0)) {
            bad.push_back("nominal flows must be positive");
        }
        check_decls(a.params);
    }
    return bad;
}

bool candidate_less(const CandidateRecord& a, const CandidateRecord& b) {
    if (a.failed != b.failed) return !a.failed;
    if (a.outer_cost != b.outer_cost) return a.outer_cost < b.outer_cost;
    if (a.inner_cost != b.inner_cost) return a.inner_cost < b.inner_cost;
    return a.structure.digest() < b.structure.digest();
}

}  // namespace fusion
