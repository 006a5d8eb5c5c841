#pragma once

#include "fusion/coil.hpp"
#include "fusion/types.hpp"

namespace fusion {

// Coil-model interface variables. Boundary conditions (inlets, flows) are
// controls; the predicted state carries the outlet temperatures.
inline constexpr const char* kWaterInVar = "water_in_c";
inline constexpr const char* kAirInVar = "air_in_c";
inline constexpr const char* kWaterFlowVar = "water_flow_kgs";
inline constexpr const char* kAirFlowVar = "air_flow_kgs";
inline constexpr const char* kWaterOutVar = "water_out_c";
inline constexpr const char* kAirOutVar = "air_out_c";

struct Twin {
    const TwinStructure* structure = nullptr;
    const ParameterVector* params = nullptr;
};

// One-step map s_{t+1} = f(s_t, a_t). Pure and deterministic.
// Throws UnknownVariable on interface mismatch, NumericalFailure on
// non-finite output.
SystemState predict_next_state(const Twin& twin, const SystemState& state, const Action& action);

// Assembles the white-box + corrector pieces of a coil twin from its
// fitted parameters.
struct CoilModel {
    CoilSpec spec;
    bool residual = false;
    ResidualCorrector corrector;
    CorrectorInputs norms;

    CoilOutlets evaluate(const StreamIn& water, const StreamIn& air) const;
};

CoilModel build_coil_model(const ModelArch& arch, const ParameterVector& params);

StreamIn water_stream(const Action& action);
StreamIn air_stream(const Action& action);

}  // namespace fusion
