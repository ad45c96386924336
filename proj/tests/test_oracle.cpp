#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "resdyn/dynamics.hpp"
#include "resdyn/oracle.hpp"

using namespace resdyn;
using Catch::Approx;

namespace {
const DeviceParams kDev{2.0, 2.0, 5.0, 2.5};
const HysteresisBand kBand{25.0, 1.0};
const AmbientTrace kAmb = [](double) { return 32.0; };
}  // namespace

TEST_CASE("undisturbed fleet power is stationary at the duty-cycle mean") {
    std::vector<Device> devs(20000, Device{kDev, kBand});
    FleetSimOptions o;
    o.dt_s = 2.0;
    o.horizon_h = 2.0;
    o.beta = 0.0;
    FleetTrace tr = simulate_fleet(devs, kAmb, o, 3);
    double expect = 20000 * 5.0 * 0.27971 / 1000.0;  // 27.97 MW
    double mean = 0.0;
    for (double p : tr.power_mw) {
        CHECK(p == Approx(expect).epsilon(0.04));  // pointwise, sampling noise
        mean += p;
    }
    mean /= static_cast<double>(tr.power_mw.size());
    CHECK(mean == Approx(expect).epsilon(0.015));
}

TEST_CASE("simulate_fleet argument and feasibility handling") {
    std::vector<Device> devs(10, Device{kDev, kBand});
    FleetSimOptions o;
    o.dt_s = 60.0;  // above the 10 s cap
    CHECK_THROWS_AS(simulate_fleet(devs, kAmb, o, 1), std::invalid_argument);

    devs.push_back(Device{DeviceParams{2.0, 2.0, 1.0, 2.5}, kBand});  // cannot cool
    FleetSimOptions ok;
    ok.dt_s = 5.0;
    ok.horizon_h = 0.1;
    ok.beta = 0.0;
    FleetTrace tr = simulate_fleet(devs, kAmb, ok, 1);
    CHECK(tr.excluded_devices == 1);
}

TEST_CASE("seed determinism, including across thread counts") {
    std::vector<Device> devs(3000, Device{kDev, kBand});
    FleetSimOptions o;
    o.dt_s = 2.0;
    o.horizon_h = 1.0;
    o.t_s = 0.25;
    o.beta = 1.0;
    o.threads = 1;
    FleetTrace serial = simulate_fleet(devs, kAmb, o, 77);
    o.threads = 4;
    FleetTrace par = simulate_fleet(devs, kAmb, o, 77);
    REQUIRE(serial.power_mw.size() == par.power_mw.size());
    for (std::size_t i = 0; i < serial.power_mw.size(); ++i)
        CHECK(serial.power_mw[i] == par.power_mw[i]);

    FleetTrace other = simulate_fleet(devs, kAmb, o, 78);
    bool any_diff = false;
    for (std::size_t i = 0; i < other.power_mw.size(); ++i)
        any_diff |= other.power_mw[i] != serial.power_mw[i];
    CHECK(any_diff);
}

TEST_CASE("long-run simulated duty matches the closed forms within 1%") {
    CycleTimes sim = measure_steady_cycle_times(Device{kDev, kBand}, 32.0, 1.0, 40, 5);
    CycleTimes cf = steady_cycle_times(kDev, kBand, 32.0);
    CHECK(sim.t_on == Approx(cf.t_on).epsilon(0.01));
    CHECK(sim.t_off == Approx(cf.t_off).epsilon(0.01));
    double duty_sim = sim.t_on / (sim.t_on + sim.t_off);
    CHECK(duty_sim == Approx(0.27971).epsilon(0.01));
}

TEST_CASE("per-group recording splits the fleet power exactly") {
    std::vector<Device> devs(2000, Device{kDev, kBand});
    std::vector<std::uint32_t> groups(2000);
    for (std::size_t i = 0; i < groups.size(); ++i) groups[i] = i % 2;
    FleetSimOptions o;
    o.dt_s = 5.0;
    o.horizon_h = 0.5;
    o.beta = 0.0;
    FleetTrace tr = simulate_fleet(devs, kAmb, o, 2, &groups, 2);
    REQUIRE(tr.group_power_mw.size() == 2);
    for (std::size_t k = 0; k < tr.power_mw.size(); ++k)
        CHECK(tr.group_power_mw[0][k] + tr.group_power_mw[1][k] == Approx(tr.power_mw[k]).margin(1e-9));
}

TEST_CASE("empirical distribution: unit step and KS behaviour") {
    CHECK_THROWS_AS(empirical_distribution(std::vector<double>(10, 1.0)), std::invalid_argument);

    EmpiricalCdf step = empirical_distribution(std::vector<double>(200, 3.0));
    CHECK(step(2.999) == 0.0);
    CHECK(step(3.0) == 1.0);

    // standard normal samples against the exact normal CDF: KS below the 95%
    // band 1.36/sqrt(n)
    std::mt19937_64 rng(123);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> xs(10000);
    for (auto& x : xs) x = nd(rng);
    EmpiricalCdf emp = empirical_distribution(std::move(xs));
    double ks = emp.ks_distance([](double x) { return normal_cdf(x); });
    CHECK(ks < 1.36 / std::sqrt(10000.0));
}

TEST_CASE("simulated temperatures stay within the band plus one-step drift") {
    // a coarse step may overshoot by at most the one-step temperature change
    std::vector<Device> devs(500, Device{kDev, kBand});
    FleetSimOptions o;
    o.dt_s = 10.0;
    o.horizon_h = 1.0;
    o.t_s = 0.5;
    o.beta = 1.0;
    // run twice: once undisturbed, once with deployment; both must stay sane
    for (double beta : {0.0, 1.0}) {
        o.beta = beta;
        FleetTrace tr = simulate_fleet(devs, kAmb, o, 6);
        double installed = 500 * 5.0 / 1000.0;
        for (double p : tr.power_mw) {
            CHECK(p >= 0.0);
            CHECK(p <= installed + 1e-12);
        }
    }
}
