#include "fusion/twin.hpp"

#include <cmath>

namespace fusion {

namespace {

double action_value(const Action& a, const char* name) {
    auto it = a.values.find(name);
    if (it == a.values.end()) {
        throw UnknownVariable(std::string("action is missing variable '") + name + "'");
    }
    return it->second;
}

}  // namespace

StreamIn water_stream(const Action& action) {
    return {action_value(action, kWaterInVar), action_value(action, kWaterFlowVar)};
}

StreamIn air_stream(const Action& action) {
    return {action_value(action, kAirInVar), action_value(action, kAirFlowVar)};
}

CoilModel build_coil_model(const ModelArch& arch, const ParameterVector& params) {
    CoilModel m;
    m.spec.ua = params.get("UA");
    m.norms.nominal_water_flow = arch.nominal_water_flow;
    m.norms.nominal_air_flow = arch.nominal_air_flow;
    if (arch.residual.enabled) {
        m.residual = true;
        const std::size_t n = static_cast<std::size_t>(7 * arch.residual.hidden_width + 2);
        std::vector<double> flat(n);
        for (std::size_t i = 0; i < n; ++i) {
            flat[i] = params.get("rw." + std::to_string(i));
        }
        m.corrector = ResidualCorrector::from_flat(arch.residual.hidden_width, flat);
    }
    return m;
}

CoilOutlets CoilModel::evaluate(const StreamIn& water, const StreamIn& air) const {
    if (residual) {
        return corrected_outlets(spec, corrector, norms, water, air);
    }
    return coil_outlets(spec, water, air);
}

SystemState predict_next_state(const Twin& twin, const SystemState& state, const Action& action) {
    const TwinStructure& s = *twin.structure;
    if (s.kind != StructureKind::MechanisticModel) {
        throw DomainError("predict_next_state: structure is not a mechanistic model");
    }
    const ModelArch& arch = s.arch();
    SystemState next;
    next.timestamp = state.timestamp + 1;
    if (arch.family == "identity") {
        next.values = state.values;
        return next;
    }
    if (arch.family != "coil_counterflow") {
        throw DomainError("predict_next_state: unknown model family " + arch.family);
    }
    if (!state.values.count(kWaterOutVar) || !state.values.count(kAirOutVar)) {
        throw UnknownVariable("state is missing coil outlet variables");
    }
    const CoilModel model = build_coil_model(arch, *twin.params);
    const CoilOutlets out = model.evaluate(water_stream(action), air_stream(action));
    if (!std::isfinite(out.water_out_c) || !std::isfinite(out.air_out_c)) {
        throw NumericalFailure("predict_next_state: non-finite coil outlet");
    }
    next.values = state.values;
    next.values[kWaterOutVar] = out.water_out_c;
    next.values[kAirOutVar] = out.air_out_c;
    return next;
}

}  // namespace fusion
