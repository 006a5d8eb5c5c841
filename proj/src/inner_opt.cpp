#include "fusion/inner_opt.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fusion {

namespace {
constexpr double kKelvinOffset = 273.15;
constexpr double kMpeDenomEps = 1e-9;
}  // namespace

void LossWeights::validate() const {
    if (!std::isfinite(data) || !std::isfinite(phys) || !std::isfinite(boundary)) {
        throw DomainError("loss weights must be finite");
    }
    if (data < 0.0 || phys < 0.0 || boundary < 0.0) {
        throw DomainError("loss weights must be >= 0");
    }
    if (data == 0.0 && phys == 0.0 && boundary == 0.0) {
        throw DomainError("loss weights must not all be zero");
    }
}

PairRange train_range(const TimeSeriesDataset& d) { return {0, d.split_index}; }

PairRange validation_range(const TimeSeriesDataset& d) {
    return {d.split_index, d.records.size()};
}

double composite_loss(const TwinStructure& structure, const ParameterVector& params,
                      const TimeSeriesDataset& dataset, PairRange range,
                      const LossWeights& weights) {
    weights.validate();
    if (range.end < range.begin + 2) {
        throw DomainError("composite_loss: range needs at least one prediction pair");
    }
    const ModelArch& arch = structure.arch();
    const bool is_coil = arch.family == "coil_counterflow";
    CoilModel model;
    if (is_coil) {
        model = build_coil_model(arch, params);
    }
    const Twin twin{&structure, &params};

    double data_sum = 0.0;
    double phys_sum = 0.0;
    double bound_sum = 0.0;
    std::size_t n = 0;
    for (std::size_t t = range.begin; t + 1 < range.end; ++t) {
        const Record& now = dataset.records[t];
        const Record& next = dataset.records[t + 1];
        double pred_w;
        double pred_a;
        if (is_coil) {
            const StreamIn water = water_stream(now.action);
            const StreamIn air = air_stream(now.action);
            const CoilOutlets out = model.evaluate(water, air);
            pred_w = out.water_out_c;
            pred_a = out.air_out_c;

            // Energy balance of the predicted outlets, normalized by C_min
            // to keep the term in temperature units.
            const double cw = water.flow_kgs * model.spec.cp_water;
            const double ca = air.flow_kgs * model.spec.cp_air;
            const double cmin = std::min(cw, ca);
            const double resid = (cw * (pred_w - water.temp_c) + ca * (pred_a - air.temp_c)) / cmin;
            phys_sum += resid * resid;

            // Second-law hinge: outlets may not overshoot past the opposing inlet.
            const double lo = std::min(water.temp_c, air.temp_c);
            const double hi = std::max(water.temp_c, air.temp_c);
            auto hinge = [&](double v) {
                const double over = std::max(0.0, v - hi) + std::max(0.0, lo - v);
                return over * over;
            };
            bound_sum += 0.5 * (hinge(pred_w) + hinge(pred_a));

            const double ew = pred_w - next.state.values.at(kWaterOutVar);
            const double ea = pred_a - next.state.values.at(kAirOutVar);
            data_sum += 0.5 * (ew * ew + ea * ea);
        } else {
            const SystemState pred = predict_next_state(twin, now.state, now.action);
            double sq = 0.0;
            for (const auto& [k, v] : pred.values) {
                const double e = v - next.state.values.at(k);
                sq += e * e;
            }
            data_sum += pred.values.empty() ? 0.0 : sq / static_cast<double>(pred.values.size());
        }
        ++n;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    const double loss =
        weights.data * data_sum * inv_n + weights.phys * phys_sum * inv_n +
        weights.boundary * bound_sum * inv_n;
    if (!std::isfinite(loss)) {
        throw NumericalFailure("composite_loss: non-finite loss");
    }
    return loss;
}

std::vector<double> encode_params(const ParameterVector& params) {
    std::vector<double> z(params.entries.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const ParamEntry& e = params.entries[i];
        z[i] = e.encoding == Encoding::Log ? encode_log(e.value) : e.value;
    }
    return z;
}

void decode_params_into(const std::vector<double>& z, ParameterVector& params) {
    for (std::size_t i = 0; i < z.size(); ++i) {
        ParamEntry& e = params.entries[i];
        e.value = e.encoding == Encoding::Log ? decode_log(z[i]) : z[i];
    }
}

std::vector<double> fd_gradient(const LossFn& loss, const ParameterVector& at) {
    std::vector<double> z = encode_params(at);
    ParameterVector probe = at;
    std::vector<double> g(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double h = std::max(1e-6, 1e-6 * std::abs(z[i]));
        const double zi = z[i];
        z[i] = zi + h;
        decode_params_into(z, probe);
        const double up = loss(probe);
        z[i] = zi - h;
        decode_params_into(z, probe);
        const double down = loss(probe);
        z[i] = zi;
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw NumericalFailure("fd_gradient: non-finite loss at probe point");
        }
        g[i] = (up - down) / (2.0 * h);
    }
    decode_params_into(z, probe);
    return g;
}

double analytic_loss_gradient_ua(const TwinStructure& structure, const ParameterVector& params,
                                 const TimeSeriesDataset& dataset, PairRange range,
                                 const LossWeights& weights) {
    const ModelArch& arch = structure.arch();
    if (arch.family != "coil_counterflow" || arch.residual.enabled) {
        throw DomainError("analytic_loss_gradient_ua: only for the pure white-box coil");
    }
    CoilSpec spec;
    spec.ua = params.get("UA");
    double grad = 0.0;
    std::size_t n = 0;
    for (std::size_t t = range.begin; t + 1 < range.end; ++t) {
        const Record& now = dataset.records[t];
        const Record& next = dataset.records[t + 1];
        const StreamIn water = water_stream(now.action);
        const StreamIn air = air_stream(now.action);
        const CoilOutletsGrad g = coil_outlets_dua(spec, water, air);
        const double ew = g.outlets.water_out_c - next.state.values.at(kWaterOutVar);
        const double ea = g.outlets.air_out_c - next.state.values.at(kAirOutVar);
        grad += ew * g.dwater_dua + ea * g.dair_dua;
        ++n;
    }
    // Energy-balance and second-law terms are identically zero for the
    // white-box coil, so only the data term carries UA sensitivity.
    return weights.data * grad / static_cast<double>(n);
}

ParameterVector initial_params(const TwinStructure& structure, std::uint64_t seed) {
    const std::vector<ParamDecl> decls = structure.parameter_decls();
    ParameterVector p;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.1, 0.1);

    // Residual weights come after the declared parameters (see
    // TwinStructure::parameter_decls) and use the corrector's own init.
    std::vector<double> corrector_flat;
    std::size_t declared_count = decls.size();
    if (structure.kind == StructureKind::MechanisticModel &&
        structure.arch().residual.enabled) {
        const int h = structure.arch().residual.hidden_width;
        corrector_flat = ResidualCorrector::init(h, seed ^ 0x9e3779b97f4a7c15ull).flatten();
        declared_count -= corrector_flat.size();
    }

    for (std::size_t i = 0; i < decls.size(); ++i) {
        const ParamDecl& d = decls[i];
        ParamEntry e{d.name, 0.0, d.lower, d.upper, d.encoding};
        if (i >= declared_count) {
            e.value = corrector_flat[i - declared_count];
        } else if (d.encoding == Encoding::Log) {
            const double mid = std::sqrt(d.lower * d.upper);
            e.value = mid * (1.0 + jitter(rng));
        } else {
            const double mid = 0.5 * (d.lower + d.upper);
            const double span = d.upper - d.lower;
            e.value = mid + jitter(rng) * 0.5 * span;
        }
        e.value = std::clamp(e.value, e.lower, e.upper);
        p.entries.push_back(e);
    }
    return p;
}

FitReport optimize_parameters(const TwinStructure& structure, const TimeSeriesDataset& dataset,
                              const LossWeights& weights, const Budget& budget) {
    FitReport report;
    if (budget.max_iters < 1) {
        throw ConfigError("optimize_parameters: max_iters must be >= 1");
    }
    const PairRange train = train_range(dataset);
    auto loss_fn = [&](const ParameterVector& p) {
        return composite_loss(structure, p, dataset, train, weights);
    };

    try {
        ParameterVector params = initial_params(structure, budget.seed);
        std::vector<double> z = encode_params(params);
        double loss = loss_fn(params);
        report.train_loss_trace.push_back(loss);

        double step = 1.0;
        int flat_streak = 0;
        ParameterVector trial = params;
        for (int iter = 0; iter < budget.max_iters; ++iter) {
            report.iterations_used = iter + 1;
            const std::vector<double> g = fd_gradient(loss_fn, params);
            double gnorm = 0.0;
            for (double gi : g) gnorm += gi * gi;
            gnorm = std::sqrt(gnorm);
            if (gnorm == 0.0) {
                report.converged = true;
                break;
            }

            // Backtracking: halve while the step does not decrease the loss.
            bool accepted = false;
            double trial_loss = loss;
            std::vector<double> zt;
            for (int halving = 0; halving <= 30; ++halving) {
                zt = z;
                for (std::size_t i = 0; i < zt.size(); ++i) {
                    zt[i] -= step * g[i];
                }
                decode_params_into(zt, trial);
                trial.project();
                trial_loss = loss_fn(trial);
                if (trial_loss < loss) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) {
                // No descent direction at any feasible step: treat as converged.
                report.converged = true;
                break;
            }

            const double rel = (loss - trial_loss) / std::max(std::abs(loss), 1e-300);
            params = trial;
            z = encode_params(params);
            loss = trial_loss;
            report.train_loss_trace.push_back(loss);
            step *= 1.5;

            if (loss == 0.0) {
                report.converged = true;
                break;
            }
            flat_streak = rel < budget.tol ? flat_streak + 1 : 0;
            if (flat_streak >= 5) {
                report.converged = true;
                break;
            }
        }
        report.fitted = params;
        report.inner_cost = report.train_loss_trace.back();
        report.validation_mpe = validation_mpe(structure, params, dataset);
        if (!report.converged) {
            report.notes = "budget exhausted; returning best-so-far";
        }
    } catch (const NumericalFailure& e) {
        report.failed = true;
        report.converged = false;
        report.notes = e.what();
        report.inner_cost = std::numeric_limits<double>::infinity();
        report.validation_mpe = std::numeric_limits<double>::infinity();
        if (report.train_loss_trace.empty()) {
            report.train_loss_trace.push_back(std::numeric_limits<double>::infinity());
        }
    }
    return report;
}

double mpe(const std::vector<double>& predictions, const std::vector<double>& truths) {
    if (predictions.size() != truths.size() || predictions.empty()) {
        throw DomainError("mpe: length mismatch or empty input");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        if (std::abs(truths[i]) <= kMpeDenomEps) {
            throw DomainError("mpe: near-zero truth value at index " + std::to_string(i));
        }
        sum += std::abs(predictions[i] - truths[i]) / std::abs(truths[i]);
    }
    return 100.0 * sum / static_cast<double>(truths.size());
}

double validation_mpe(const TwinStructure& structure, const ParameterVector& params,
                      const TimeSeriesDataset& dataset) {
    const PairRange range = validation_range(dataset);
    if (range.end < range.begin + 2) {
        throw DomainError("validation_mpe: validation split has no prediction pairs");
    }
    const Twin twin{&structure, &params};
    std::vector<double> pred;
    std::vector<double> truth;
    for (std::size_t t = range.begin; t + 1 < range.end; ++t) {
        const SystemState next =
            predict_next_state(twin, dataset.records[t].state, dataset.records[t].action);
        for (const auto& [k, v] : next.values) {
            pred.push_back(v + kKelvinOffset);
            truth.push_back(dataset.records[t + 1].state.values.at(k) + kKelvinOffset);
        }
    }
    return mpe(pred, truth);
}

}  // namespace fusion
