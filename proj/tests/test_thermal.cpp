#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "resdyn/thermal.hpp"
#include "support/ode_oracle.hpp"

using namespace resdyn;
using Catch::Approx;

namespace {
// Reference desk device used throughout the suite: C=2 kWh/degC, R=2 degC/kW,
// p=5 kW, cop=2.5 (heat rate 12.5 kW), band [24.5, 25.5], ambient 32 degC.
const DeviceParams kDev{2.0, 2.0, 5.0, 2.5};
const HysteresisBand kBand{25.0, 1.0};
const double kAmbient = 32.0;
}  // namespace

TEST_CASE("temperature_step reaches the OFF equilibrium at ambient") {
    DeviceState s{25.0, 0};
    DeviceState out = temperature_step(s, kAmbient, kDev, 1000.0);
    CHECK(out.theta == Approx(32.0).margin(1e-9));
}

TEST_CASE("temperature_step reaches the ON equilibrium ambient - R*Q") {
    DeviceState s{25.0, 1};
    DeviceState out = temperature_step(s, kAmbient, kDev, 1000.0);
    CHECK(out.theta == Approx(32.0 - 2.0 * 12.5).margin(1e-9));
}

TEST_CASE("temperature_step crosses the band in one base ON time") {
    // dt equal to the steady ON time takes the device from the upper to the
    // lower band edge exactly.
    CycleTimes ct = steady_cycle_times(kDev, kBand, kAmbient);
    DeviceState out = temperature_step(DeviceState{25.5, 1}, kAmbient, kDev, ct.t_on);
    CHECK(out.theta == Approx(24.5).margin(1e-12));
    // spec anchor: dt ~ 0.22228 h lands at ~24.5 degC
    out = temperature_step(DeviceState{25.5, 1}, kAmbient, kDev, 0.22228);
    CHECK(out.theta == Approx(24.5).margin(1e-4));
}

TEST_CASE("temperature_step equals fine-step Euler integration") {
    for (int mode : {0, 1}) {
        DeviceState s{26.0, mode};
        double exact = temperature_step(s, kAmbient, kDev, 0.3).theta;
        double euler = resdyn_test::euler_temperature(26.0, mode, kAmbient, kDev, 0.3, 10000);
        CHECK(exact == Approx(euler).margin(1e-6));
    }
}

TEST_CASE("temperature_step rejects nonpositive dt") {
    CHECK_THROWS_AS(temperature_step(DeviceState{25, 0}, kAmbient, kDev, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(temperature_step(DeviceState{25, 0}, kAmbient, kDev, -1.0), std::invalid_argument);
}

TEST_CASE("mode_update implements the hysteresis rule") {
    CHECK(mode_update(26.0, 0, kBand) == 1);
    CHECK(mode_update(24.0, 1, kBand) == 0);
    CHECK(mode_update(25.0, 1, kBand) == 1);
    CHECK(mode_update(25.0, 0, kBand) == 0);
}

TEST_CASE("steady_cycle_times matches the closed form and the ODE oracle") {
    CycleTimes ct = steady_cycle_times(kDev, kBand, kAmbient);
    CHECK(ct.t_on == Approx(0.22228).margin(5e-6));
    CHECK(ct.t_off == Approx(0.57241).margin(5e-6));

    double on_oracle = resdyn_test::euler_on_time(25.5, 24.5, kAmbient, kDev);
    double off_oracle = resdyn_test::euler_off_time(24.5, 25.5, kAmbient, kDev);
    CHECK(ct.t_on == Approx(on_oracle).epsilon(1e-3));
    CHECK(ct.t_off == Approx(off_oracle).epsilon(1e-3));
}

TEST_CASE("steady_cycle_times degenerates with the deadband") {
    HysteresisBand tiny{25.0, 1e-7};
    CycleTimes ct = steady_cycle_times(kDev, tiny, kAmbient);
    CHECK(ct.t_on < 1e-6);
    CHECK(ct.t_off < 1e-6);
}

TEST_CASE("steady_cycle_times rejects ambient inside the band") {
    CHECK_THROWS_AS(steady_cycle_times(kDev, kBand, 25.0), std::domain_error);
}

TEST_CASE("steady_cycle_times rejects a device that cannot reach the lower edge") {
    DeviceParams weak{2.0, 2.0, 1.0, 2.5};  // R*Q = 5 < ambient - lower = 7.5
    CHECK_THROWS_AS(steady_cycle_times(weak, kBand, kAmbient), std::domain_error);
}

TEST_CASE("shifted_cycle_times equals steady times of the shifted band") {
    CycleTimes ct = shifted_cycle_times(kDev, kBand, kAmbient, 1.0);
    CHECK(ct.t_on == Approx(0.21058).margin(1e-5));
    CHECK(ct.t_off == Approx(0.66821).margin(1e-5));

    double on_oracle = resdyn_test::euler_on_time(26.5, 25.5, kAmbient, kDev);
    CHECK(ct.t_on == Approx(on_oracle).epsilon(1e-3));

    CycleTimes near0 = shifted_cycle_times(kDev, kBand, kAmbient, 1e-12);
    CycleTimes base = steady_cycle_times(kDev, kBand, kAmbient);
    CHECK(near0.t_on == Approx(base.t_on).margin(1e-9));
    CHECK(near0.t_off == Approx(base.t_off).margin(1e-9));
}

TEST_CASE("shifted_cycle_times rejects an infeasible shift") {
    CHECK_THROWS_AS(shifted_cycle_times(kDev, kBand, kAmbient, 8.0), std::domain_error);
    CHECK_THROWS_AS(shifted_cycle_times(kDev, kBand, kAmbient, 0.0), std::invalid_argument);
}

TEST_CASE("migration_delay matches the OFF-drift oracle") {
    double d = migration_delay(kDev, kBand, kAmbient, 1.0);
    CHECK(d == Approx(0.66821).margin(5e-6));
    double oracle = resdyn_test::euler_off_time(25.5, 26.5, kAmbient, kDev);
    CHECK(d == Approx(oracle).epsilon(1e-3));

    CHECK(migration_delay(kDev, kBand, kAmbient, 1e-12) == Approx(0.0).margin(1e-9));
    CHECK_THROWS_AS(migration_delay(kDev, kBand, kAmbient, 32.0 - 25.5), std::domain_error);
}

TEST_CASE("cycle-time consistency: thermostat simulation reproduces T_on and T_off") {
    // Simulate the hybrid model from the upper edge with fine steps; the
    // crossing times must agree with the closed forms within one step.
    const double h = 1e-5;
    DeviceState s{kBand.upper(), 1};
    double t = 0.0;
    while (s.mode == 1) {
        s = temperature_step(s, kAmbient, kDev, h);
        s.mode = mode_update(s.theta, s.mode, kBand);
        t += h;
    }
    CycleTimes ct = steady_cycle_times(kDev, kBand, kAmbient);
    CHECK(t == Approx(ct.t_on).margin(2 * h));
    double t_off = 0.0;
    while (s.mode == 0) {
        s = temperature_step(s, kAmbient, kDev, h);
        s.mode = mode_update(s.theta, s.mode, kBand);
        t_off += h;
    }
    CHECK(t_off == Approx(ct.t_off).margin(2 * h));
}

TEST_CASE("T_off increases with the setpoint: derivative sign check") {
    // closed-form derivative of T_off wrt setpoint vs central finite difference
    auto t_off = [&](double sp) {
        return steady_cycle_times(kDev, HysteresisBand{sp, 1.0}, kAmbient).t_off;
    };
    for (double sp : {20.0, 23.0, 25.0, 27.0}) {
        double lo = sp - 0.5, hi = sp + 0.5;
        double analytic = kDev.C * kDev.R *
                          (1.0 / (kAmbient - hi) - 1.0 / (kAmbient - lo));  // d/d(setpoint)
        double fd = (t_off(sp + 1e-5) - t_off(sp - 1e-5)) / 2e-5;
        CHECK(analytic * fd > 0.0);
        CHECK(fd > 0.0);  // hotter setpoint -> slower warming across the band
    }
}

TEST_CASE("p_literal heat-rate mode changes only the cycle-time formulas") {
    DeviceParams strong{2.0, 2.0, 5.0, 2.5};
    HysteresisBand hot{27.0, 1.0};  // p*R = 10 > ambient - lower = 5.5
    CycleTimes lit = steady_cycle_times(strong, hot, kAmbient, HeatRateMode::p_literal);
    CycleTimes cq = steady_cycle_times(strong, hot, kAmbient, HeatRateMode::cop_times_p);
    CHECK(lit.t_on > cq.t_on);              // weaker heat term -> slower cooling
    CHECK(lit.t_off == Approx(cq.t_off));   // OFF leg has no heat term
}
