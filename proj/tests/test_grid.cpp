#include <catch2/catch_amalgamated.hpp>

#include <functional>
#include <random>

#include "resdyn/grid.hpp"
#include "support/vertex_enum.hpp"

using namespace resdyn;
using Catch::Approx;

namespace {
Network two_bus(double limit = 50.0) {
    Network n;
    n.buses = {{1, 0.0}, {2, 80.0}};
    n.lines = {{1, 2, 0.1, limit}};
    n.reference_bus = 1;
    return n;
}

Network triangle() {
    Network n;
    n.buses = {{1, 0.0}, {2, 60.0}, {3, 70.0}};
    n.lines = {{1, 2, 0.1, 100.0}, {1, 3, 0.1, 30.0}, {2, 3, 0.1, 100.0}};
    n.reference_bus = 1;
    return n;
}
}  // namespace

TEST_CASE("susceptance matrix of a single line") {
    auto b = build_susceptance(two_bus());
    CHECK(b[0][0] == Approx(10.0));
    CHECK(b[1][1] == Approx(10.0));
    CHECK(b[0][1] == Approx(-10.0));
    CHECK(b[1][0] == Approx(-10.0));
}

TEST_CASE("susceptance row sums vanish and disconnection is reported") {
    Network n = triangle();
    auto b = build_susceptance(n);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(b[i][0] + b[i][1] + b[i][2] == Approx(0.0).margin(1e-12));

    // removing both lines touching bus 3 isolates it
    n.states = {{{true, false, false}, 1.0}};
    CHECK_THROWS_WITH(build_susceptance(n, 0), Catch::Matchers::ContainsSubstring("3"));
}

TEST_CASE("two-bus curtailment equals the limit shortfall") {
    Network n = two_bus(50.0);
    OpfResult r = min_total_curtailment(n, {100.0, 0.0}, {0.0, 80.0});
    CHECK(r.curtailment_mw[1] == Approx(30.0).margin(1e-7));
    CHECK(r.curtailment_mw[0] == 0.0);
    CHECK(r.total_curtailment_mw == Approx(30.0).margin(1e-7));
    CHECK(r.generation_mw[0] == Approx(50.0).margin(1e-7));
    CHECK(std::abs(r.flow_mw[0]) <= 50.0 + 1e-6);

    // ample limit: everything served
    OpfResult r2 = min_total_curtailment(two_bus(200.0), {100.0, 0.0}, {0.0, 80.0});
    CHECK(r2.total_curtailment_mw == Approx(0.0).margin(1e-9));
}

TEST_CASE("three-bus congested case matches exhaustive vertex enumeration") {
    Network net = triangle();
    std::vector<double> gen{150.0, 0.0, 0.0}, load{0.0, 60.0, 70.0};
    OpfResult r = min_total_curtailment(net, gen, load);

    // oracle over the original formulation: x = [theta2, theta3, p1, D2, D3]
    resdyn_test::DenseLp lp;
    lp.n = 5;
    lp.c = {0.0, 0.0, 0.0, -(1.0 + 1e-6), -(1.0 + 2e-6)};
    auto row = [&](std::vector<double> a, double b, bool eq) {
        lp.rows.push_back({std::move(a), b, eq});
    };
    double y = 10.0;
    // balance at buses 1..3 (theta1 = 0)
    row({-y, -y, -1.0, 0.0, 0.0}, 0.0, true);
    row({2 * y, -y, 0.0, 1.0, 0.0}, 0.0, true);
    row({-y, 2 * y, 0.0, 0.0, 1.0}, 0.0, true);
    // line limits
    row({y, 0.0, 0.0, 0.0, 0.0}, 100.0, false);  //  1->2
    row({-y, 0.0, 0.0, 0.0, 0.0}, 100.0, false);
    row({0.0, y, 0.0, 0.0, 0.0}, 30.0, false);  //  1->3
    row({0.0, -y, 0.0, 0.0, 0.0}, 30.0, false);
    row({y, -y, 0.0, 0.0, 0.0}, 100.0, false);  //  2->3
    row({-y, y, 0.0, 0.0, 0.0}, 100.0, false);
    // variable bounds
    row({0, 0, 1, 0, 0}, 150.0, false);
    row({0, 0, -1, 0, 0}, 0.0, false);
    row({0, 0, 0, 1, 0}, 60.0, false);
    row({0, 0, 0, -1, 0}, 0.0, false);
    row({0, 0, 0, 0, 1}, 70.0, false);
    row({0, 0, 0, 0, -1}, 0.0, false);

    auto best = resdyn_test::enumerate_optimum(lp);
    REQUIRE(best.has_value());
    double lc2 = 60.0 - (*best)[3], lc3 = 70.0 - (*best)[4];
    CHECK(r.curtailment_mw[1] == Approx(lc2).margin(1e-6));
    CHECK(r.curtailment_mw[2] == Approx(lc3).margin(1e-6));
    CHECK(r.total_curtailment_mw == Approx(lc2 + lc3).margin(1e-6));
    CHECK(r.total_curtailment_mw > 0.0);  // the 30 MW line forces shedding
}

TEST_CASE("randomized instances: balance, limits, monotonicity, determinism") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ux(0.05, 0.3), ug(0.0, 120.0), ud(0.0, 90.0),
        ul(20.0, 160.0);
    for (int inst = 0; inst < 30; ++inst) {
        std::size_t nb = 3 + rng() % 4;
        Network net;
        for (std::size_t i = 0; i < nb; ++i) net.buses.push_back({static_cast<int>(i + 1), 0.0});
        net.reference_bus = 1;
        for (std::size_t i = 1; i < nb; ++i)  // random spanning tree
            net.lines.push_back(
                {static_cast<int>(1 + rng() % i), static_cast<int>(i + 1), ux(rng), ul(rng)});
        for (std::size_t e = 0; e < nb / 2; ++e) {  // extra chords
            int a = static_cast<int>(1 + rng() % nb), b = static_cast<int>(1 + rng() % nb);
            if (a != b) net.lines.push_back({a, b, ux(rng), ul(rng)});
        }
        std::vector<double> gen(nb, 0.0), load(nb, 0.0);
        for (std::size_t i = 0; i < nb; ++i) {
            if (rng() % 2) gen[i] = ug(rng);
            load[i] = ud(rng);
        }
        OpfResult r = min_total_curtailment(net, gen, load);
        double gsum = 0.0, ssum = 0.0;
        for (std::size_t i = 0; i < nb; ++i) {
            gsum += r.generation_mw[i];
            ssum += r.served_mw[i];
            CHECK(r.curtailment_mw[i] >= -1e-9);
            CHECK(r.curtailment_mw[i] <= load[i] + 1e-9);
        }
        CHECK(gsum == Approx(ssum).margin(1e-6));
        for (std::size_t l = 0; l < net.lines.size(); ++l)
            CHECK(std::abs(r.flow_mw[l]) <= net.lines[l].limit_mw + 1e-6);

        // capacity monotonicity: more capacity anywhere never hurts
        std::vector<double> gen2 = gen;
        gen2[rng() % nb] += 25.0;
        OpfResult r2 = min_total_curtailment(net, gen2, load);
        CHECK(r2.total_curtailment_mw <= r.total_curtailment_mw + 1e-6);

        // determinism of the per-bus allocation
        OpfResult r3 = min_total_curtailment(net, gen, load);
        for (std::size_t i = 0; i < nb; ++i)
            CHECK(r3.curtailment_mw[i] == r.curtailment_mw[i]);
    }
}

TEST_CASE("system-state enumeration") {
    Network net = two_bus();
    LzPolynomial g1 = LzPolynomial::from_states({{0.0, 0.2}, {100.0, 0.8}});
    LzPolynomial g2 = LzPolynomial::unit();

    auto states = enumerate_system_states({g1, g2}, net, 0);
    REQUIRE(states.size() == 2);
    double mass = 0.0;
    for (const auto& s : states) mass += s.probability;
    CHECK(mass == Approx(1.0).margin(1e-12));

    // 3-state x 2-state product: expectation additivity under enumeration
    LzPolynomial a = LzPolynomial::from_states({{0.0, 0.3}, {50.0, 0.4}, {90.0, 0.3}});
    LzPolynomial b = LzPolynomial::from_states({{0.0, 0.5}, {40.0, 0.5}});
    auto all = enumerate_system_states({a, b}, net, 0, 0.0);
    REQUIRE(all.size() == 6);
    double etot = 0.0;
    for (const auto& s : all) etot += s.probability * (s.avail_gen_mw[0] + s.avail_gen_mw[1]);
    CHECK(etot == Approx(a.expectation(0) + b.expectation(0)).margin(1e-9));

    // the cap triggers the advisory error
    CHECK_THROWS_WITH(enumerate_system_states({a, b}, net, 0, 0.0, 5),
                      Catch::Matchers::ContainsSubstring("lz_reduce"));

    // pruning drops the rare state and renormalizes
    LzPolynomial rare = LzPolynomial::from_states({{0.0, 1.0 - 1e-7}, {10.0, 1e-7}});
    auto pruned = enumerate_system_states({rare, g2}, net, 0, 1e-6);
    REQUIRE(pruned.size() == 1);
    CHECK(pruned[0].probability == Approx(1.0));
}
