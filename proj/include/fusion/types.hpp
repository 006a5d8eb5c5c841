#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fusion/errors.hpp"

namespace fusion {

// Canonical internal units: °C, kg/s, W, s.

struct SystemState {
    std::map<std::string, double> values;
    int timestamp = 0;
};

struct Action {
    std::map<std::string, double> values;
};

struct Record {
    SystemState state;
    Action action;
};

struct TimeSeriesDataset {
    std::vector<Record> records;
    std::size_t split_index = 0;  // records[0..split) train, [split..T] validation

    // Throws SchemaError on invariant breach.
    void validate() const;

    std::size_t size() const { return records.size(); }
};

enum class Encoding { Linear, Log };

struct ParamDecl {
    std::string name;
    double lower = 0.0;
    double upper = 0.0;
    Encoding encoding = Encoding::Linear;
};

struct ParamEntry {
    std::string name;
    double value = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    Encoding encoding = Encoding::Linear;
};

struct ParameterVector {
    std::vector<ParamEntry> entries;

    double get(const std::string& name) const;
    bool has(const std::string& name) const;
    void set(const std::string& name, double v);
    void validate() const;

    // Clamp every entry into its bounds.
    void project();

    std::size_t size() const { return entries.size(); }
};

enum class StructureKind { EquipmentDesign, MechanisticModel };
enum class Provenance { Seed, Evolved, Generated };

enum class Orientation { North, South };

struct Placement {
    std::string asset_id;
    int x = 0;
    int y = 0;
    Orientation orientation = Orientation::North;
};

struct HallGrid {
    int width = 24;
    int depth = 24;
    int clearance = 1;
    bool alternate_aisles = true;
};

struct EquipmentDesign {
    std::string site_id;            // weather profile id
    HallGrid grid;
    std::vector<Placement> placements;
    std::vector<ParamDecl> params;  // optional continuous setpoints, usually empty
};

struct ResidualSpec {
    bool enabled = false;
    int hidden_width = 8;
};

struct ModelArch {
    std::string family;  // "coil_counterflow" or "identity"
    std::vector<ParamDecl> params;
    ResidualSpec residual;
    double nominal_water_flow = 2.0;  // kg/s, for corrector input normalization
    double nominal_air_flow = 3.0;
};

struct TwinStructure {
    StructureKind kind = StructureKind::MechanisticModel;
    Provenance provenance = Provenance::Seed;
    std::variant<EquipmentDesign, ModelArch> body;

    const EquipmentDesign& design() const { return std::get<EquipmentDesign>(body); }
    const ModelArch& arch() const { return std::get<ModelArch>(body); }

    // Parameter declarations owned by this structure, residual weights included.
    std::vector<ParamDecl> parameter_decls() const;

    // Stable content hash of the canonical serialized form.
    std::string digest() const;

    // Structural invariants only (bounds ordering, grid ranges, log-positivity).
    // Cross-checks against a loaded library live in assets.hpp.
    std::vector<std::string> structural_violations() const;
};

struct CandidateRecord {
    TwinStructure structure;
    ParameterVector fitted_params;
    double outer_cost = std::numeric_limits<double>::infinity();
    double inner_cost = std::numeric_limits<double>::infinity();
    int iteration = 0;
    bool failed = false;
    std::string notes;
};

// Total order used for top-K selection: cost ascending, failed last,
// ties broken by (inner_cost, digest).
bool candidate_less(const CandidateRecord& a, const CandidateRecord& b);

}  // namespace fusion
