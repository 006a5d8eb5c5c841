#include "fusion/coil.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fusion {

namespace {
constexpr double kCrUnityBand = 1e-9;
}

double effectiveness_counterflow(double ntu, double cr) {
    if (!std::isfinite(ntu) || !std::isfinite(cr)) {
        throw DomainError("effectiveness_counterflow: non-finite input");
    }
    if (ntu < 0.0) {
        throw DomainError("effectiveness_counterflow: NTU < 0");
    }
    if (cr < 0.0 || cr > 1.0) {
        throw DomainError("effectiveness_counterflow: Cr outside [0,1]");
    }
    if (std::abs(1.0 - cr) < kCrUnityBand) {
        return ntu / (1.0 + ntu);
    }
    const double x = std::exp(-ntu * (1.0 - cr));
    return (1.0 - x) / (1.0 - cr * x);
}

double effectiveness_counterflow_dntu(double ntu, double cr) {
    if (ntu < 0.0 || cr < 0.0 || cr > 1.0) {
        throw DomainError("effectiveness_counterflow_dntu: input out of range");
    }
    if (std::abs(1.0 - cr) < kCrUnityBand) {
        const double d = 1.0 + ntu;
        return 1.0 / (d * d);
    }
    const double x = std::exp(-ntu * (1.0 - cr));
    const double denom = 1.0 - cr * x;
    return (1.0 - cr) * (1.0 - cr) * x / (denom * denom);
}

namespace {

struct CapacityPair {
    double c_water;
    double c_air;
    double c_min;
    double c_max;
};

CapacityPair capacities(const CoilSpec& spec, const StreamIn& water, const StreamIn& air) {
    if (!(water.flow_kgs > 0.0) || !(air.flow_kgs > 0.0)) {
        throw DomainError("coil_outlets: non-positive mass flow");
    }
    if (!std::isfinite(water.temp_c) || !std::isfinite(air.temp_c)) {
        throw DomainError("coil_outlets: non-finite inlet temperature");
    }
    CapacityPair c{};
    c.c_water = water.flow_kgs * spec.cp_water;
    c.c_air = air.flow_kgs * spec.cp_air;
    c.c_min = std::min(c.c_water, c.c_air);
    c.c_max = std::max(c.c_water, c.c_air);
    return c;
}

}  // namespace

CoilOutlets coil_outlets(const CoilSpec& spec, const StreamIn& water, const StreamIn& air) {
    if (spec.ua < 0.0) {
        throw DomainError("coil_outlets: UA < 0");
    }
    const CapacityPair c = capacities(spec, water, air);
    const double cr = c.c_min / c.c_max;
    const double ntu = spec.ua / c.c_min;
    const double eps = effectiveness_counterflow(ntu, cr);
    // Heat flows from the hotter inlet stream to the colder one.
    const double dt = air.temp_c - water.temp_c;  // >0: air hot, water cold
    const double q = eps * c.c_min * dt;
    CoilOutlets out;
    out.water_out_c = water.temp_c + q / c.c_water;
    out.air_out_c = air.temp_c - q / c.c_air;
    return out;
}

CoilOutletsGrad coil_outlets_dua(const CoilSpec& spec, const StreamIn& water,
                                 const StreamIn& air) {
    if (spec.ua < 0.0) {
        throw DomainError("coil_outlets_dua: UA < 0");
    }
    const CapacityPair c = capacities(spec, water, air);
    const double cr = c.c_min / c.c_max;
    const double ntu = spec.ua / c.c_min;
    const double eps = effectiveness_counterflow(ntu, cr);
    const double deps_dntu = effectiveness_counterflow_dntu(ntu, cr);
    const double dt = air.temp_c - water.temp_c;
    const double q = eps * c.c_min * dt;
    const double dq_dua = deps_dntu * dt;  // dNTU/dUA = 1/C_min cancels eps' * C_min

    CoilOutletsGrad g;
    g.outlets.water_out_c = water.temp_c + q / c.c_water;
    g.outlets.air_out_c = air.temp_c - q / c.c_air;
    g.dwater_dua = dq_dua / c.c_water;
    g.dair_dua = -dq_dua / c.c_air;
    return g;
}

std::vector<double> ResidualCorrector::flatten() const {
    std::vector<double> flat;
    flat.reserve(weight_count());
    flat.insert(flat.end(), w1.begin(), w1.end());
    flat.insert(flat.end(), b1.begin(), b1.end());
    flat.insert(flat.end(), w2.begin(), w2.end());
    flat.insert(flat.end(), b2.begin(), b2.end());
    return flat;
}

ResidualCorrector ResidualCorrector::from_flat(int hidden_width, const std::vector<double>& flat) {
    ResidualCorrector rc;
    rc.hidden_width = hidden_width;
    const std::size_t h = static_cast<std::size_t>(hidden_width);
    if (flat.size() != h * 4 + h + 2 * h + 2) {
        throw DomainError("ResidualCorrector::from_flat: size mismatch");
    }
    auto it = flat.begin();
    rc.w1.assign(it, it + h * 4);
    it += h * 4;
    rc.b1.assign(it, it + h);
    it += h;
    rc.w2.assign(it, it + 2 * h);
    it += 2 * h;
    rc.b2.assign(it, it + 2);
    return rc;
}

ResidualCorrector ResidualCorrector::init(int hidden_width, std::uint64_t seed) {
    ResidualCorrector rc;
    rc.hidden_width = hidden_width;
    const std::size_t h = static_cast<std::size_t>(hidden_width);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> small(-0.1, 0.1);
    rc.w1.resize(h * 4);
    for (auto& w : rc.w1) w = small(rng);
    rc.b1.resize(h);
    for (auto& b : rc.b1) b = small(rng);
    rc.w2.assign(2 * h, 0.0);
    rc.b2.assign(2, 0.0);
    return rc;
}

void ResidualCorrector::forward(const double in[4], double out[2]) const {
    const std::size_t h = static_cast<std::size_t>(hidden_width);
    out[0] = b2[0];
    out[1] = b2[1];
    for (std::size_t j = 0; j < h; ++j) {
        double a = b1[j];
        for (std::size_t k = 0; k < 4; ++k) {
            a += w1[j * 4 + k] * in[k];
        }
        const double t = std::tanh(a);
        out[0] += w2[j] * t;
        out[1] += w2[h + j] * t;
    }
}

void normalize_corrector_inputs(const StreamIn& water, const StreamIn& air,
                                const CorrectorInputs& norms, double out[4]) {
    out[0] = (water.temp_c - 20.0) / 20.0;
    out[1] = (air.temp_c - 20.0) / 20.0;
    out[2] = water.flow_kgs / norms.nominal_water_flow;
    out[3] = air.flow_kgs / norms.nominal_air_flow;
}

CoilOutlets corrected_outlets(const CoilSpec& spec, const ResidualCorrector& corrector,
                              const CorrectorInputs& norms, const StreamIn& water,
                              const StreamIn& air) {
    CoilOutlets out = coil_outlets(spec, water, air);
    double in[4];
    normalize_corrector_inputs(water, air, norms, in);
    double corr[2];
    corrector.forward(in, corr);
    out.water_out_c += corr[0];
    out.air_out_c += corr[1];
    return out;
}

double encode_log(double v) {
    if (!(v > 0.0)) {
        throw DomainError("encode_log: v <= 0");
    }
    return std::log(v);
}

double decode_log(double z) { return std::exp(z); }

}  // namespace fusion
