#include <cmath>
#include <random>

#include <doctest.h>

#include "fusion/coil.hpp"

using namespace fusion;

namespace {

// Independent oracle: integrate the counter-flow two-stream temperature
// profiles along the exchanger with fine-step RK4 and read the
// effectiveness off the hot-stream outlet. Kept free of the closed form it
// checks.
double effectiveness_ode_oracle(double ntu, double cr, int steps = 20000) {
    // Nondimensional counter-flow equations over x in [0,1]:
    //   dTh/dx = -NTU (Th - Tc)
    //   dTc/dx = -NTU Cr (Th - Tc)   (cold stream flows opposite)
    // Boundary conditions sit on opposite ends (Th(0)=1, Tc(1)=0), so shoot
    // on the unknown cold-outlet temperature Tc(0).
    auto integrate = [&](double tc0) {
        double th = 1.0;
        double tc = tc0;
        const double h = 1.0 / steps;
        auto f = [&](double thv, double tcv, double& dth, double& dtc) {
            const double d = thv - tcv;
            dth = -ntu * d;
            dtc = -ntu * cr * d;
        };
        for (int i = 0; i < steps; ++i) {
            double k1h, k1c, k2h, k2c, k3h, k3c, k4h, k4c;
            f(th, tc, k1h, k1c);
            f(th + 0.5 * h * k1h, tc + 0.5 * h * k1c, k2h, k2c);
            f(th + 0.5 * h * k2h, tc + 0.5 * h * k2c, k3h, k3c);
            f(th + h * k3h, tc + h * k3c, k4h, k4c);
            th += h / 6.0 * (k1h + 2 * k2h + 2 * k3h + k4h);
            tc += h / 6.0 * (k1c + 2 * k2c + 2 * k3c + k4c);
        }
        return tc;  // Tc at x=1, must equal the cold inlet 0
    };
    // Bisection on Tc(0).
    double lo = 0.0;
    double hi = 1.0;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (integrate(mid) > 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    const double tc0 = 0.5 * (lo + hi);
    // Effectiveness = hot-side temperature drop over the inlet difference.
    double th = 1.0;
    double tc = tc0;
    const double h = 1.0 / 20000;
    for (int i = 0; i < 20000; ++i) {
        double k1h, k1c, k2h, k2c, k3h, k3c, k4h, k4c;
        auto f = [&](double thv, double tcv, double& dth, double& dtc) {
            const double d = thv - tcv;
            dth = -ntu * d;
            dtc = -ntu * cr * d;
        };
        f(th, tc, k1h, k1c);
        f(th + 0.5 * h * k1h, tc + 0.5 * h * k1c, k2h, k2c);
        f(th + 0.5 * h * k2h, tc + 0.5 * h * k2c, k3h, k3c);
        f(th + h * k3h, tc + h * k3c, k4h, k4c);
        th += h / 6.0 * (k1h + 2 * k2h + 2 * k3h + k4h);
        tc += h / 6.0 * (k1c + 2 * k2c + 2 * k3c + k4c);
    }
    return 1.0 - th;
}

}  // namespace

TEST_CASE("effectiveness trivial values") {
    CHECK(effectiveness_counterflow(0.0, 0.0) == doctest::Approx(0.0));
    CHECK(effectiveness_counterflow(0.0, 0.7) == doctest::Approx(0.0));
    CHECK(effectiveness_counterflow(1.0, 1.0) == doctest::Approx(0.5));
    CHECK(effectiveness_counterflow(2.0, 1.0) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("effectiveness matches the ODE oracle") {
    // Frozen from the oracle itself (NTU=1, Cr=0.5).
    CHECK(effectiveness_counterflow(1.0, 0.5) ==
          doctest::Approx(0.5647).epsilon(1e-3));
    CHECK(std::abs(effectiveness_counterflow(1.0, 0.5) -
                   effectiveness_ode_oracle(1.0, 0.5)) < 1e-6);
    CHECK(std::abs(effectiveness_counterflow(2.5, 0.9) -
                   effectiveness_ode_oracle(2.5, 0.9)) < 1e-6);
    CHECK(std::abs(effectiveness_counterflow(4.0, 1.0) -
                   effectiveness_ode_oracle(4.0, 1.0 - 1e-12)) < 1e-6);
}

TEST_CASE("effectiveness domain errors") {
    CHECK_THROWS_AS(effectiveness_counterflow(-0.1, 0.5), DomainError);
    CHECK_THROWS_AS(effectiveness_counterflow(1.0, -0.1), DomainError);
    CHECK_THROWS_AS(effectiveness_counterflow(1.0, 1.1), DomainError);
}

TEST_CASE("effectiveness monotone in NTU") {
    for (double cr : {0.0, 0.3, 0.7, 1.0}) {
        double prev = -1.0;
        for (double ntu = 0.0; ntu <= 6.0; ntu += 0.1) {
            const double eps = effectiveness_counterflow(ntu, cr);
            CHECK(eps >= prev);
            CHECK(eps >= 0.0);
            CHECK(eps <= 1.0);
            prev = eps;
        }
    }
}

TEST_CASE("coil outlets: zero UA and zero driving difference") {
    CoilSpec spec;
    spec.ua = 0.0;
    const StreamIn water{10.0, 2.0};
    const StreamIn air{30.0, 3.0};
    auto out = coil_outlets(spec, water, air);
    CHECK(out.water_out_c == doctest::Approx(10.0));
    CHECK(out.air_out_c == doctest::Approx(30.0));

    spec.ua = 5000.0;
    auto same = coil_outlets(spec, {22.0, 2.0}, {22.0, 3.0});
    CHECK(same.water_out_c == doctest::Approx(22.0));
    CHECK(same.air_out_c == doctest::Approx(22.0));
}

TEST_CASE("coil outlets: NTU=1 reference point against the ODE oracle") {
    // water 10°C @ 2 kg/s (C=8372), air 30°C @ 3 kg/s (C=3015), UA=3015 W/K.
    CoilSpec spec;
    spec.ua = 3015.0;
    const StreamIn water{10.0, 2.0};
    const StreamIn air{30.0, 3.0};
    const double cw = 2.0 * spec.cp_water;
    const double ca = 3.0 * spec.cp_air;
    const double cr = ca / cw;
    const double eps = effectiveness_ode_oracle(1.0, cr);
    const double q = eps * ca * 20.0;
    auto out = coil_outlets(spec, water, air);
    CHECK(out.water_out_c == doctest::Approx(10.0 + q / cw).epsilon(1e-6));
    CHECK(out.air_out_c == doctest::Approx(30.0 - q / ca).epsilon(1e-6));
    // Q/C identity
    const double q_w = cw * (out.water_out_c - 10.0);
    const double q_a = ca * (30.0 - out.air_out_c);
    CHECK(std::abs(q_w - q_a) < 1e-9 * std::abs(q_w));
}

TEST_CASE("coil outlets: energy conservation and second law over random inputs") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> t_w(2.0, 20.0);
    std::uniform_real_distribution<double> t_a(15.0, 45.0);
    std::uniform_real_distribution<double> flow(0.2, 6.0);
    std::uniform_real_distribution<double> ua(0.0, 30000.0);
    for (int i = 0; i < 1000; ++i) {
        CoilSpec spec;
        spec.ua = ua(rng);
        const StreamIn water{t_w(rng), flow(rng)};
        const StreamIn air{t_a(rng), flow(rng)};
        auto out = coil_outlets(spec, water, air);
        const double cw = water.flow_kgs * spec.cp_water;
        const double ca = air.flow_kgs * spec.cp_air;
        const double q_w = cw * (out.water_out_c - water.temp_c);
        const double q_a = ca * (air.temp_c - out.air_out_c);
        CHECK(std::abs(q_w - q_a) <= 1e-6 * std::max(1.0, std::abs(q_w)));
        const double lo = std::min(water.temp_c, air.temp_c);
        const double hi = std::max(water.temp_c, air.temp_c);
        CHECK(out.water_out_c >= lo - 1e-9);
        CHECK(out.water_out_c <= hi + 1e-9);
        CHECK(out.air_out_c >= lo - 1e-9);
        CHECK(out.air_out_c <= hi + 1e-9);
    }
}

TEST_CASE("cooling coil air outlet non-increasing in UA") {
    const StreamIn water{8.0, 2.0};
    const StreamIn air{32.0, 3.0};
    double prev = 1e9;
    for (double ua = 0.0; ua <= 20000.0; ua += 500.0) {
        CoilSpec spec;
        spec.ua = ua;
        const double t = coil_outlets(spec, water, air).air_out_c;
        CHECK(t <= prev + 1e-12);
        prev = t;
    }
}

TEST_CASE("coil domain errors") {
    CoilSpec spec;
    spec.ua = 100.0;
    CHECK_THROWS_AS(coil_outlets(spec, {10.0, 0.0}, {30.0, 3.0}), DomainError);
    CHECK_THROWS_AS(coil_outlets(spec, {10.0, 2.0}, {30.0, -1.0}), DomainError);
}

TEST_CASE("residual corrector: zero weights add exactly nothing") {
    CoilSpec spec;
    spec.ua = 4000.0;
    ResidualCorrector zero;
    zero.hidden_width = 8;
    zero.w1.assign(32, 0.0);
    zero.b1.assign(8, 0.0);
    zero.w2.assign(16, 0.0);
    zero.b2.assign(2, 0.0);
    CorrectorInputs norms;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> t_w(4.0, 16.0);
    std::uniform_real_distribution<double> t_a(20.0, 40.0);
    std::uniform_real_distribution<double> flow(0.5, 5.0);
    for (int i = 0; i < 100; ++i) {
        const StreamIn water{t_w(rng), flow(rng)};
        const StreamIn air{t_a(rng), flow(rng)};
        auto plain = coil_outlets(spec, water, air);
        auto corrected = corrected_outlets(spec, zero, norms, water, air);
        CHECK(corrected.water_out_c == plain.water_out_c);
        CHECK(corrected.air_out_c == plain.air_out_c);
    }
}

TEST_CASE("residual corrector: initialized output layer is zero") {
    auto rc = ResidualCorrector::init(8, 99);
    double in[4] = {0.3, -0.2, 1.1, 0.9};
    double out[2];
    rc.forward(in, out);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
}

TEST_CASE("residual corrector: deterministic forward pass") {
    auto rc = ResidualCorrector::init(8, 5);
    rc.w2[3] = 0.7;
    rc.b2[1] = -0.1;
    CoilSpec spec;
    spec.ua = 2500.0;
    CorrectorInputs norms;
    const StreamIn water{9.0, 1.8};
    const StreamIn air{31.0, 2.7};
    auto a = corrected_outlets(spec, rc, norms, water, air);
    auto b = corrected_outlets(spec, rc, norms, water, air);
    CHECK(a.water_out_c == b.water_out_c);
    CHECK(a.air_out_c == b.air_out_c);
}

TEST_CASE("corrector flatten round trip") {
    auto rc = ResidualCorrector::init(4, 21);
    auto flat = rc.flatten();
    CHECK(flat.size() == rc.weight_count());
    auto back = ResidualCorrector::from_flat(4, flat);
    CHECK(back.flatten() == flat);
}

TEST_CASE("log encoding") {
    CHECK(encode_log(1.0) == doctest::Approx(0.0));
    CHECK(encode_log(std::exp(1.0)) == doctest::Approx(1.0));
    CHECK_THROWS_AS(encode_log(0.0), DomainError);
    CHECK_THROWS_AS(encode_log(-2.0), DomainError);
    for (double v = 1e-6; v <= 1e6; v *= 10.0) {
        CHECK(decode_log(encode_log(v)) == doctest::Approx(v).epsilon(1e-12));
        CHECK(decode_log(encode_log(v)) > 0.0);
    }
}

TEST_CASE("analytic UA sensitivity matches finite differences") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> t_w(2.0, 18.0);
    std::uniform_real_distribution<double> t_a(20.0, 42.0);
    std::uniform_real_distribution<double> flow(0.5, 5.0);
    std::uniform_real_distribution<double> ua(100.0, 20000.0);
    for (int i = 0; i < 20; ++i) {
        CoilSpec spec;
        spec.ua = ua(rng);
        const StreamIn water{t_w(rng), flow(rng)};
        const StreamIn air{t_a(rng), flow(rng)};
        const auto g = coil_outlets_dua(spec, water, air);
        const double h = std::max(1e-3, 1e-6 * spec.ua);
        CoilSpec up = spec;
        up.ua += h;
        CoilSpec dn = spec;
        dn.ua -= h;
        const auto o_up = coil_outlets(up, water, air);
        const auto o_dn = coil_outlets(dn, water, air);
        const double fd_w = (o_up.water_out_c - o_dn.water_out_c) / (2.0 * h);
        const double fd_a = (o_up.air_out_c - o_dn.air_out_c) / (2.0 * h);
        CHECK(g.dwater_dua == doctest::Approx(fd_w).epsilon(1e-4));
        CHECK(g.dair_dua == doctest::Approx(fd_a).epsilon(1e-4));
    }
}
