#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fusion/twin.hpp"
#include "fusion/types.hpp"

namespace fusion {

struct LossWeights {
    double data = 1.0;
    double phys = 0.1;
    double boundary = 0.1;

    void validate() const;  // finite, >= 0, not all zero
};

struct Budget {
    int max_iters = 500;
    double tol = 1e-8;
    std::uint64_t seed = 0;
};

struct FitReport {
    ParameterVector fitted;
    std::vector<double> train_loss_trace;
    double inner_cost = 0.0;
    double validation_mpe = 0.0;
    int iterations_used = 0;
    bool converged = false;
    bool failed = false;
    std::string notes;
};

// One-step prediction pairs (t -> t+1) drawn from [begin, end) with both
// endpoints of each pair inside the range. Training uses [0, split),
// validation [split, T].
struct PairRange {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive record index; pairs are t in [begin, end-1)
};

PairRange train_range(const TimeSeriesDataset& d);
PairRange validation_range(const TimeSeriesDataset& d);

// Composite physics-informed loss: weighted data MSE + normalized
// energy-balance residual of the predicted outlets + second-law hinge.
double composite_loss(const TwinStructure& structure, const ParameterVector& params,
                      const TimeSeriesDataset& dataset, PairRange range,
                      const LossWeights& weights);

// Encoded optimizer space: log-encoded entries are differentiated and
// stepped in z = ln(v).
std::vector<double> encode_params(const ParameterVector& params);
void decode_params_into(const std::vector<double>& z, ParameterVector& params);

using LossFn = std::function<double(const ParameterVector&)>;

// Central finite differences in encoded space, h = max(1e-6, 1e-6*|z|).
std::vector<double> fd_gradient(const LossFn& loss, const ParameterVector& at);

// Closed-form d(loss)/d(UA) for the pure white-box coil (no residual).
// The energy-balance and second-law terms vanish identically there, so
// only the data term contributes.
double analytic_loss_gradient_ua(const TwinStructure& structure, const ParameterVector& params,
                                 const TimeSeriesDataset& dataset, PairRange range,
                                 const LossWeights& weights);

// Midpoint (linear) / geometric mean (log) of bounds with seeded +-10%
// jitter; residual-corrector weights use their zero-output initialization.
ParameterVector initial_params(const TwinStructure& structure, std::uint64_t seed);

// Projected gradient descent with backtracking line search.
FitReport optimize_parameters(const TwinStructure& structure, const TimeSeriesDataset& dataset,
                              const LossWeights& weights, const Budget& budget);

// 100 * mean(|pred - true| / |true|). DomainError on |true| <= 1e-9.
double mpe(const std::vector<double>& predictions, const std::vector<double>& truths);

// Validation MPE over outlet temperatures; denominators in Kelvin so that
// values near 0 °C stay meaningful.
double validation_mpe(const TwinStructure& structure, const ParameterVector& params,
                      const TimeSeriesDataset& dataset);

}  // namespace fusion
