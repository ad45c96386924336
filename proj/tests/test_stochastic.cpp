#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "resdyn/oracle.hpp"
#include "resdyn/stochastic.hpp"

using namespace resdyn;
using Catch::Approx;

namespace {
const DeviceParams kDev{2.0, 2.0, 5.0, 2.5};
const HysteresisBand kBand{25.0, 1.0};
const double kMin = 1.0 / 60.0;

Cluster desk_cluster(std::size_t copies = 100000) {
    Cluster c;
    c.representative = Device{kDev, kBand};
    c.member_power_sum = 5.0 * static_cast<double>(copies);
    c.member_count = copies;
    c.base_times = steady_cycle_times(kDev, kBand, 32.0);
    return c;
}

UncertaintySpec unc(double sa, double ss) {
    UncertaintySpec u;
    u.ambient_mean = 32.0;
    u.ambient_dev = sa > 0 ? ParamDist::normal(0.0, sa) : ParamDist::constant(0.0);
    u.setpoint_dev = ss > 0 ? ParamDist::normal(0.0, ss) : ParamDist::constant(0.0);
    return u;
}

/// closed-form d(eta)/d(theta_a) of the steady duty for the desk device
double analytic_steady_duty_ambient_derivative() {
    double cr = 4.0, rq = 25.0, lo = 24.5, hi = 25.5, tha = 32.0;
    double t_on = cr * std::log((rq + hi - tha) / (rq + lo - tha));
    double t_off = cr * std::log((tha - lo) / (tha - hi));
    double dton = cr * (1.0 / (rq + lo - tha) - 1.0 / (rq + hi - tha));
    double dtoff = cr * (1.0 / (tha - lo) - 1.0 / (tha - hi));
    double cyc = t_on + t_off;
    return (dton * t_off - t_on * dtoff) / (cyc * cyc);
}
}  // namespace

TEST_CASE("zero variance collapses interval probabilities to an indicator") {
    StochasticModel m({desk_cluster()}, 1.0, 1.0, unc(0.0, 0.0));
    for (double t : {0.5, 1.1, 1.5, 2.5}) {
        auto rho = interval_probabilities(m.clusters()[0].nominal, m.endpoints()[0], t);
        double dt = t - 1.0;
        double sum = 0.0;
        for (std::size_t i = 0; i < rho.size(); ++i) {
            const auto& p = m.clusters()[0].nominal.pieces[i];
            bool inside = dt >= p.lower && dt < p.upper;
            CHECK(rho[i] == (inside ? 1.0 : 0.0));
            sum += rho[i];
        }
        CHECK(sum == Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("zero variance reproduces the deterministic power exactly") {
    auto c = desk_cluster();
    StochasticModel m({c}, 1.0, 1.0, unc(0.0, 0.0));
    std::vector<Cluster> cs{c};
    std::vector<MigrationTimeline> tls{build_timeline(kDev, kBand, 1.0, 32.0, 1.0)};
    for (double t = 0.0; t <= 4.0; t += 7 * kMin) {
        CHECK(std::abs(m.mean_power(t) - aggregate_power(cs, tls, t)) < 1e-12);
        CumulantSet k = m.cumulants(t);
        for (int v = 1; v <= k.order; ++v) CHECK(k.k[v - 1] == 0.0);
    }
}

TEST_CASE("interval probabilities split evenly at a breakpoint under noise") {
    StochasticModel m({desk_cluster()}, 1.0, 1.0, unc(1.0, 0.0));
    const auto& tl = m.clusters()[0].nominal;
    double t = 1.0 + tl.breakpoints[0];  // nominal first breakpoint (~13.34 min)
    auto rho = interval_probabilities(tl, m.endpoints()[0], t);
    double sum = 0.0;
    for (double r : rho) sum += r;
    CHECK(sum == Approx(1.0).margin(1e-9));
    // pieces 1 (on_drain) and 2 (all_off) straddle this endpoint
    CHECK(rho[1] == Approx(0.5).margin(0.02));
    CHECK(rho[2] == Approx(0.5).margin(0.02));

    // sanity against direct sampling: perturb ambient, recompute the
    // breakpoint, count which side t falls on
    std::mt19937_64 rng(4);
    std::normal_distribution<double> na(0.0, 1.0);
    int below = 0, n = 4000;
    for (int i = 0; i < n; ++i) {
        MigrationTimeline ptl = build_timeline(kDev, kBand, 1.0, 32.0 + na(rng), 1.0);
        if (ptl.breakpoints[0] <= tl.breakpoints[0]) ++below;
    }
    CHECK(rho[2] == Approx(static_cast<double>(below) / n).margin(0.03));
}

TEST_CASE("duty sensitivities match analytic differentiation on the steady piece") {
    StochasticModel m({desk_cluster()}, 1.0, 2.0, unc(1.0, 0.5));
    auto [da, ds] = duty_sensitivities(m.clusters()[0], PieceKind::pre_steady, 0.5);
    CHECK(da == Approx(analytic_steady_duty_ambient_derivative()).epsilon(1e-4));
    CHECK(ds < 0.0);  // raising the setpoint lowers the duty
    CHECK(ds == Approx(-da).epsilon(1e-6));  // formulas depend on theta_a - setpoint only
    CHECK_THROWS_AS(duty_sensitivities(m.clusters()[0], PieceKind::pre_steady, 0.5, 0.0),
                    std::invalid_argument);
}

TEST_CASE("deviation cumulants: trivial cases and sampled variance") {
    auto c = desk_cluster();
    StochasticModel m({c}, 1.0, 1.0, unc(1.0, 0.5));
    // odd orders vanish for symmetric inputs
    for (double t : {0.5, 1.2, 2.0}) {
        CumulantSet k = m.cumulants(t);
        CHECK(k.k[0] == 0.0);
        CHECK(k.k[2] == 0.0);
        CHECK(k.k[1] >= 0.0);
    }
    // variance against direct sampling of the linearized deviation
    double t = 1.0 + 5 * kMin;
    auto [a, b] = deviation_weights(m.clusters(), m.endpoints(), t);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> na(0.0, 1.0), ns(0.0, 0.5);
    double s2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double d = a * na(rng) + b * ns(rng);
        s2 += d * d;
    }
    s2 /= n;
    CHECK(m.cumulants(t).k[1] == Approx(s2).epsilon(0.02));
}

TEST_CASE("cumulant homogeneity in the ambient deviation scale") {
    auto c = desk_cluster();
    double t = 1.0 + 5 * kMin;
    UncertaintySpec u1 = unc(0.0, 0.0);
    u1.ambient_dev = ParamDist::uniform(-0.6, 0.6);
    UncertaintySpec u2 = u1;
    u2.ambient_dev = ParamDist::uniform(-1.2, 1.2);  // scale s = 2
    CumulantSet k1 = StochasticModel({c}, 1.0, 1.0, u1).cumulants(t);
    CumulantSet k2 = StochasticModel({c}, 1.0, 1.0, u2).cumulants(t);
    CHECK(k2.k[1] == Approx(4.0 * k1.k[1]).epsilon(1e-9));   // s^2
    CHECK(k2.k[2] == Approx(8.0 * k1.k[2]).margin(1e-15));   // s^3 (zero stays zero)
    CHECK(k2.k[3] == Approx(16.0 * k1.k[3]).epsilon(1e-9));  // s^4
}

TEST_CASE("Gram-Charlier with Gaussian cumulants is the normal density") {
    CumulantSet k;
    k.order = 6;
    k.k[1] = 9.0;  // sd 3
    GramCharlierPdf pdf(k);
    CHECK(pdf(0.0) * 3.0 == Approx(0.39894).margin(1e-5));
    CHECK(pdf(3.0) * 3.0 == Approx(normal_pdf(1.0)).margin(1e-6));
    double mass = detail::integrate([&](double x) { return pdf(x); }, -36.0, 36.0, 1e-10);
    CHECK(mass == Approx(1.0).margin(1e-6));
}

TEST_CASE("Gram-Charlier with negative excess kurtosis stays a density") {
    // uniform-driven input: kappa_4 < 0
    CumulantSet k;
    k.order = 6;
    double a = 2.0;
    k.k[1] = a * a / 3.0;
    k.k[3] = -2.0 * std::pow(a, 4) / 15.0;
    k.k[5] = 16.0 * std::pow(a, 6) / 63.0;
    GramCharlierPdf pdf(k);
    double mass = detail::integrate([&](double x) { return pdf(x); }, -14.0 * pdf.sd(),
                                    14.0 * pdf.sd(), 1e-10);
    CHECK(mass == Approx(1.0).margin(1e-6));
    CHECK(pdf.degenerate() == false);

    CumulantSet degenerate;
    degenerate.order = 2;
    GramCharlierPdf d(degenerate);
    CHECK(d.degenerate());
    CHECK(aggregate_cdf(10.0, d, 9.99) == 0.0);
    CHECK(aggregate_cdf(10.0, d, 10.0) == 1.0);
}

TEST_CASE("Gram-Charlier CDF tracks a sampled linearized deviation (KS < 0.05)") {
    auto c = desk_cluster();
    UncertaintySpec u = unc(0.0, 0.0);
    u.ambient_dev = ParamDist::normal(0.0, 0.8);
    u.setpoint_dev = ParamDist::uniform(-0.6, 0.6);
    StochasticModel m({c}, 1.0, 1.0, u);
    for (double tm : {5.0, 60.0}) {
        double t = 1.0 + tm * kMin;
        auto [a, b] = deviation_weights(m.clusters(), m.endpoints(), t);
        CumulantSet k = m.cumulants(t);
        GramCharlierPdf pdf(k);
        std::mt19937_64 rng(31);
        std::normal_distribution<double> na(0.0, 0.8);
        std::uniform_real_distribution<double> ns(-0.6, 0.6);
        std::vector<double> xs(10000);
        for (auto& x : xs) x = a * na(rng) + b * ns(rng);
        EmpiricalCdf emp = empirical_distribution(std::move(xs));
        double ks = emp.ks_distance([&](double x) { return aggregate_cdf(0.0, pdf, x); });
        CHECK(ks < 0.05);
    }
}

TEST_CASE("aggregate CDF: limits, symmetry and monotonicity") {
    auto c = desk_cluster();
    StochasticModel m({c}, 1.0, 1.0, unc(0.8, 0.4));
    double t = 1.0 + 5 * kMin;
    PowerDistribution d = m.distribution(t);
    CHECK(d.cdf(d.mean_mw - 1000.0) == 0.0);
    CHECK(d.cdf(d.mean_mw + 1000.0) == Approx(1.0).margin(1e-6));
    CHECK(d.cdf(d.mean_mw) == Approx(0.5).margin(1e-6));  // symmetric cumulants
    double prev = -1.0;
    for (double x = d.mean_mw - 40.0; x <= d.mean_mw + 40.0; x += 0.1) {
        double f = d.cdf(x);
        CHECK(f >= prev - 1e-9);
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
        prev = f;
    }
}

TEST_CASE("model CDF matches a nonlinear resampled fleet distribution") {
    // Oracle: draw deviations, rebuild the timeline at the perturbed inputs
    // and evaluate the deterministic power; the linearized Gram-Charlier CDF
    // must stay within 0.05 of that nonlinear empirical distribution.
    auto c = desk_cluster();
    UncertaintySpec u = unc(0.35, 0.2);
    StochasticModel m({c}, 1.0, 1.0, u);
    double t = 1.0 + 5 * kMin;
    PowerDistribution model = m.distribution(t);

    std::mt19937_64 rng(12);
    std::normal_distribution<double> na(0.0, 0.35), ns(0.0, 0.2);
    std::vector<double> samples;
    samples.reserve(4000);
    for (int i = 0; i < 4000; ++i) {
        double da = na(rng), dsp = ns(rng);
        std::vector<Cluster> pcs{c};
        pcs[0].representative.band.setpoint += dsp;
        std::vector<MigrationTimeline> tls{build_timeline(
            pcs[0].representative.params, pcs[0].representative.band, 1.0, 32.0 + da, 1.0)};
        samples.push_back(aggregate_power(pcs, tls, t));
    }
    EmpiricalCdf emp = empirical_distribution(std::move(samples));
    double ks = emp.ks_distance([&](double x) { return model.cdf(x); });
    CHECK(ks < 0.05);
}
