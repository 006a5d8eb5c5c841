#include "fusion/serialize.hpp"

#include <fstream>
#include <sstream>

namespace fusion {

using nlohmann::json;

std::string encoding_name(Encoding e) { return e == Encoding::Log ? "log" : "linear"; }

Encoding encoding_from_name(const std::string& s) {
    if (s == "log") return Encoding::Log;
    if (s == "linear") return Encoding::Linear;
    throw SchemaError({"unknown encoding: " + s});
}

namespace {

std::string provenance_name(Provenance p) {
    switch (p) {
        case Provenance::Seed: return "seed";
        case Provenance::Evolved: return "evolved";
        case Provenance::Generated: return "generated";
    }
    return "seed";
}

Provenance provenance_from_name(const std::string& s, std::vector<std::string>& bad) {
    if (s == "seed") return Provenance::Seed;
    if (s == "evolved") return Provenance::Evolved;
    if (s == "generated") return Provenance::Generated;
    bad.push_back("unknown provenance: " + s);
    return Provenance::Seed;
}

// Strict object reader: tracks consumed keys, rejects leftovers.
class ObjReader {
  public:
    ObjReader(const json& j, std::string where, std::vector<std::string>& bad)
        : j_(j), where_(std::move(where)), bad_(bad) {
        if (!j_.is_object()) {
            bad_.push_back(where_ + ": expected an object");
            ok_ = false;
        }
    }

    bool ok() const { return ok_; }

    const json* get(const char* key, bool required = true) {
        if (!ok_) return nullptr;
        seen_.push_back(key);
        auto it = j_.find(key);
        if (it == j_.end()) {
            if (required) bad_.push_back(where_ + ": missing field '" + key + "'");
            return nullptr;
        }
        return &*it;
    }

    double number(const char* key, double fallback = 0.0, bool required = true) {
        const json* v = get(key, required);
        if (!v) return fallback;
        if (!v->is_number()) {
            bad_.push_back(where_ + ": field '" + key + "' must be a number");
            return fallback;
        }
        return v->get<double>();
    }

    int integer(const char* key, int fallback = 0, bool required = true) {
        const json* v = get(key, required);
        if (!v) return fallback;
        if (!v->is_number_integer()) {
            bad_.push_back(where_ + ": field '" + key + "' must be an integer");
            return fallback;
        }
        return v->get<int>();
    }

    std::string text(const char* key, bool required = true) {
        const json* v = get(key, required);
        if (!v) return {};
        if (!v->is_string()) {
            bad_.push_back(where_ + ": field '" + key + "' must be a string");
            return {};
        }
        return v->get<std::string>();
    }

    bool boolean(const char* key, bool fallback, bool required = true) {
        const json* v = get(key, required);
        if (!v) return fallback;
        if (!v->is_boolean()) {
            bad_.push_back(where_ + ": field '" + key + "' must be a boolean");
            return fallback;
        }
        return v->get<bool>();
    }

    void finish() {
        if (!ok_) return;
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            bool known = false;
            for (const auto& s : seen_) {
                if (it.key() == s) {
                    known = true;
                    break;
                }
            }
            if (!known) {
                bad_.push_back(where_ + ": unknown field '" + it.key() + "'");
            }
        }
    }

  private:
    const json& j_;
    std::string where_;
    std::vector<std::string>& bad_;
    std::vector<std::string> seen_;
    bool ok_ = true;
};

json decls_to_json(const std::vector<ParamDecl>& decls) {
    json arr = json::array();
    for (const auto& d : decls) {
        arr.push_back({{"name", d.name},
                       {"lower", d.lower},
                       {"upper", d.upper},
                       {"encoding", encoding_name(d.encoding)}});
    }
    return arr;
}

std::vector<ParamDecl> decls_from_json(const json& j, const std::string& where,
                                       std::vector<std::string>& bad) {
    std::vector<ParamDecl> decls;
    if (!j.is_array()) {
        bad.push_back(where + ": 'params' must be an array");
        return decls;
    }
    for (std::size_t i = 0; i < j.size(); ++i) {
        ObjReader r(j[i], where + ".params[" + std::to_string(i) + "]", bad);
        ParamDecl d;
        d.name = r.text("name");
        d.lower = r.number("lower");
        d.upper = r.number("upper");
        const std::string enc = r.text("encoding");
        if (!enc.empty()) {
            if (enc == "log") {
                d.encoding = Encoding::Log;
            } else if (enc == "linear") {
                d.encoding = Encoding::Linear;
            } else {
                bad.push_back(where + ": unknown encoding '" + enc + "'");
            }
        }
        r.finish();
        decls.push_back(d);
    }
    return decls;
}

}  // namespace

json structure_to_json(const TwinStructure& s) {
    json j;
    j["schema"] = kStructureSchema;
    j["provenance"] = provenance_name(s.provenance);
    if (s.kind == StructureKind::EquipmentDesign) {
        const EquipmentDesign& d = s.design();
        j["kind"] = "equipment_design";
        j["site"] = d.site_id;
        j["grid"] = {{"width", d.grid.width},
                     {"depth", d.grid.depth},
                     {"clearance", d.grid.clearance},
                     {"alternate_aisles", d.grid.alternate_aisles}};
        json pl = json::array();
        for (const auto& p : d.placements) {
            pl.push_back({{"asset", p.asset_id},
                          {"x", p.x},
                          {"y", p.y},
                          {"orientation", p.orientation == Orientation::North ? "north" : "south"}});
        }
        j["placements"] = pl;
        j["params"] = decls_to_json(d.params);
    } else {
        const ModelArch& a = s.arch();
        j["kind"] = "mechanistic_model";
        j["family"] = a.family;
        j["params"] = decls_to_json(a.params);
        j["residual"] = {{"enabled", a.residual.enabled}, {"hidden_width", a.residual.hidden_width}};
        j["nominal"] = {{"water_flow_kgs", a.nominal_water_flow}, {"air_flow_kgs", a.nominal_air_flow}};
    }
    return j;
}

TwinStructure structure_from_json(const json& j) {
    std::vector<std::string> bad;
    ObjReader r(j, "structure", bad);
    const std::string schema = r.text("schema");
    if (!schema.empty() && schema != kStructureSchema) {
        bad.push_back("structure: unexpected schema id '" + schema + "'");
    }
    TwinStructure s;
    s.provenance = provenance_from_name(r.text("provenance"), bad);
    const std::string kind = r.text("kind");
    if (kind == "equipment_design") {
        s.kind = StructureKind::EquipmentDesign;
        EquipmentDesign d;
        d.site_id = r.text("site");
        if (const json* g = r.get("grid")) {
            ObjReader gr(*g, "structure.grid", bad);
            d.grid.width = gr.integer("width");
            d.grid.depth = gr.integer("depth");
            d.grid.clearance = gr.integer("clearance");
            d.grid.alternate_aisles = gr.boolean("alternate_aisles", true);
            gr.finish();
        }
        if (const json* pl = r.get("placements")) {
            if (!pl->is_array()) {
                bad.push_back("structure: 'placements' must be an array");
            } else {
                for (std::size_t i = 0; i < pl->size(); ++i) {
                    ObjReader pr((*pl)[i], "structure.placements[" + std::to_string(i) + "]", bad);
                    Placement p;
                    p.asset_id = pr.text("asset");
                    p.x = pr.integer("x");
                    p.y = pr.integer("y");
                    const std::string o = pr.text("orientation");
                    if (o == "south") {
                        p.orientation = Orientation::South;
                    } else if (o != "north" && !o.empty()) {
                        bad.push_back("structure: unknown orientation '" + o + "'");
                    }
                    pr.finish();
                    d.placements.push_back(p);
                }
            }
        }
        if (const json* p = r.get("params", false)) {
            d.params = decls_from_json(*p, "structure", bad);
        }
        s.body = std::move(d);
    } else if (kind == "mechanistic_model") {
        s.kind = StructureKind::MechanisticModel;
        ModelArch a;
        a.family = r.text("family");
        if (const json* p = r.get("params")) {
            a.params = decls_from_json(*p, "structure", bad);
        }
        if (const json* res = r.get("residual", false)) {
            ObjReader rr(*res, "structure.residual", bad);
            a.residual.enabled = rr.boolean("enabled", false);
            a.residual.hidden_width = rr.integer("hidden_width", 8, false);
            rr.finish();
        }
        if (const json* nom = r.get("nominal", false)) {
            ObjReader nr(*nom, "structure.nominal", bad);
            a.nominal_water_flow = nr.number("water_flow_kgs");
            a.nominal_air_flow = nr.number("air_flow_kgs");
            nr.finish();
        }
        s.body = std::move(a);
    } else {
        bad.push_back("structure: unknown kind '" + kind + "'");
    }
    r.finish();
    if (bad.empty()) {
        auto structural = s.structural_violations();
        bad.insert(bad.end(), structural.begin(), structural.end());
    }
    if (!bad.empty()) {
        throw SchemaError(bad);
    }
    return s;
}

json dataset_to_json(const TimeSeriesDataset& d) {
    json j;
    j["schema"] = kDatasetSchema;
    j["split_index"] = d.split_index;
    json recs = json::array();
    for (const auto& r : d.records) {
        recs.push_back({{"t", r.state.timestamp},
                        {"state", json(r.state.values)},
                        {"action", json(r.action.values)}});
    }
    j["records"] = recs;
    return j;
}

TimeSeriesDataset dataset_from_json(const json& j) {
    std::vector<std::string> bad;
    ObjReader r(j, "dataset", bad);
    const std::string schema = r.text("schema");
    if (!schema.empty() && schema != kDatasetSchema) {
        bad.push_back("dataset: unexpected schema id '" + schema + "'");
    }
    TimeSeriesDataset d;
    d.split_index = static_cast<std::size_t>(r.integer("split_index"));
    if (const json* recs = r.get("records")) {
        if (!recs->is_array()) {
            bad.push_back("dataset: 'records' must be an array");
        } else {
            for (std::size_t i = 0; i < recs->size(); ++i) {
                ObjReader rr((*recs)[i], "dataset.records[" + std::to_string(i) + "]", bad);
                Record rec;
                rec.state.timestamp = rr.integer("t");
                if (const json* st = rr.get("state")) {
                    if (st->is_object()) {
                        rec.state.values = st->get<std::map<std::string, double>>();
                    } else {
                        bad.push_back("dataset: record state must be an object");
                    }
                }
                if (const json* ac = rr.get("action")) {
                    if (ac->is_object()) {
                        rec.action.values = ac->get<std::map<std::string, double>>();
                    } else {
                        bad.push_back("dataset: record action must be an object");
                    }
                }
                rr.finish();
                d.records.push_back(rec);
            }
        }
    }
    r.finish();
    if (!bad.empty()) {
        throw SchemaError(bad);
    }
    d.validate();
    return d;
}

json params_to_json(const ParameterVector& p) {
    json arr = json::array();
    for (const auto& e : p.entries) {
        arr.push_back({{"name", e.name},
                       {"value", e.value},
                       {"lower", e.lower},
                       {"upper", e.upper},
                       {"encoding", encoding_name(e.encoding)}});
    }
    return arr;
}

ParameterVector params_from_json(const json& j) {
    std::vector<std::string> bad;
    ParameterVector p;
    if (!j.is_array()) {
        throw SchemaError({"params: expected an array"});
    }
    for (std::size_t i = 0; i < j.size(); ++i) {
        ObjReader r(j[i], "params[" + std::to_string(i) + "]", bad);
        ParamEntry e;
        e.name = r.text("name");
        e.value = r.number("value");
        e.lower = r.number("lower");
        e.upper = r.number("upper");
        const std::string enc = r.text("encoding");
        if (enc == "log") e.encoding = Encoding::Log;
        r.finish();
        p.entries.push_back(e);
    }
    if (!bad.empty()) {
        throw SchemaError(bad);
    }
    return p;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open file: " + path);
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write file: " + path);
    }
    out << j.dump(2) << "\n";
}

}  // namespace fusion
