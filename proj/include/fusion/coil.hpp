#pragma once

#include <cstdint>
#include <vector>

#include "fusion/errors.hpp"

namespace fusion {

inline constexpr double kCpWater = 4186.0;  // J/(kg·K)
inline constexpr double kCpAir = 1005.0;    // J/(kg·K)

struct CoilSpec {
    double ua = 0.0;  // W/K, lumped conductance
    double cp_water = kCpWater;
    double cp_air = kCpAir;
};

struct StreamIn {
    double temp_c = 0.0;
    double flow_kgs = 0.0;
};

struct CoilOutlets {
    double water_out_c = 0.0;
    double air_out_c = 0.0;
};

// Counter-flow effectiveness. Cr = 1 uses the NTU/(1+NTU) limit inside a
// |1-Cr| < 1e-9 switch band where the general formula degenerates to 0/0.
double effectiveness_counterflow(double ntu, double cr);

// d(effectiveness)/d(NTU) at fixed Cr, matching the branch selection above.
double effectiveness_counterflow_dntu(double ntu, double cr);

CoilOutlets coil_outlets(const CoilSpec& spec, const StreamIn& water, const StreamIn& air);

struct CoilOutletsGrad {
    CoilOutlets outlets;
    double dwater_dua = 0.0;
    double dair_dua = 0.0;
};

// White-box outlets with analytic sensitivity to UA.
CoilOutletsGrad coil_outlets_dua(const CoilSpec& spec, const StreamIn& water, const StreamIn& air);

// Two dense layers, tanh hidden activation. Inputs are the normalized
// (T_water_in, T_air_in, m_water, m_air); outputs additive °C corrections
// to (water_out, air_out).
struct ResidualCorrector {
    int hidden_width = 8;
    std::vector<double> w1;  // hidden_width x 4, row-major
    std::vector<double> b1;  // hidden_width
    std::vector<double> w2;  // 2 x hidden_width, row-major
    std::vector<double> b2;  // 2

    std::size_t weight_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

    // Flat order: w1, b1, w2, b2.
    std::vector<double> flatten() const;
    static ResidualCorrector from_flat(int hidden_width, const std::vector<double>& flat);

    // Output layer zero, hidden layer small uniform from the seed, so the
    // initial correction is exactly (0, 0).
    static ResidualCorrector init(int hidden_width, std::uint64_t seed);

    void forward(const double in[4], double out[2]) const;
};

struct CorrectorInputs {
    double nominal_water_flow = 2.0;
    double nominal_air_flow = 3.0;
};

// Normalization: (T - 20)/20 for temperatures, flow/nominal for flows.
void normalize_corrector_inputs(const StreamIn& water, const StreamIn& air,
                                const CorrectorInputs& norms, double out[4]);

CoilOutlets corrected_outlets(const CoilSpec& spec, const ResidualCorrector& corrector,
                              const CorrectorInputs& norms, const StreamIn& water,
                              const StreamIn& air);

double encode_log(double v);  // DomainError on v <= 0
double decode_log(double z);

}  // namespace fusion
