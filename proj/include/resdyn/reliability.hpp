#pragma once

// End-to-end evaluation: fleet synthesis -> clustered dynamics -> power
// distribution -> reserve capacity states -> per-bus composition -> per-state
// DC-OPF -> time-varying reliability indices.

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "resdyn/common.hpp"
#include "resdyn/dynamics.hpp"
#include "resdyn/grid.hpp"
#include "resdyn/multistate.hpp"
#include "resdyn/oracle.hpp"
#include "resdyn/population.hpp"
#include "resdyn/stochastic.hpp"

namespace resdyn {

struct ClusterPolicy {
    enum class Kind { fixed, auto_select };
    Kind kind = Kind::fixed;
    std::size_t count = 8;
    std::size_t max_count = 15;           ///< upper bound for auto selection
    std::size_t selection_sample = 20000; ///< devices used when auto-selecting
};

struct OrtPlacement {
    int bus = 0;
    double standby_failure_prob = 0.0;  ///< scales all nonzero-reserve probabilities
};

struct EvaluationOptions {
    double prob_floor = 1e-9;
    std::size_t max_states = 2000000;
    std::size_t max_bus_states = 5000;
    std::vector<double> snapshot_min;  ///< times (minutes) for state-table dumps
    unsigned threads = 0;
};

struct McOptions {
    double dt_s = 2.0;
    std::size_t replications = 120;
    std::size_t samples = 20000;
    std::size_t fleet_subsample = 0;  ///< 0 = simulate the full fleet per replication
};

struct Scenario {
    std::string name;
    std::uint64_t seed = 1;
    double horizon_h = 4.0;
    double dt_h = 1.0 / 60.0;
    PopulationSpec population;
    ClusterPolicy clusters;
    double deploy_t_h = 1.0;  ///< t_s
    double beta = 1.0;        ///< degC
    UncertaintySpec uncertainty;
    OrtPlacement ort;
    bool ort_enabled = true;
    Network network;
    std::vector<MultiStateUnit> generation_units;
    std::vector<MultiStateUnit> reserve_units;
    EvaluationOptions evaluation;
    McOptions mc;

    void validate() const {
        if (!(dt_h > 0.0)) throw std::invalid_argument("Scenario: dt must be > 0");
        if (!(horizon_h > deploy_t_h))
            throw std::invalid_argument("Scenario: horizon must exceed the deployment time");
        population.validate();
        uncertainty.validate();
        network.validate();
        if (ort_enabled && population.count > 0) network.bus_index(ort.bus);
    }

    [[nodiscard]] std::vector<double> time_grid() const {
        std::size_t n = static_cast<std::size_t>(std::llround(horizon_h / dt_h)) + 1;
        std::vector<double> g(n);
        for (std::size_t k = 0; k < n; ++k) g[k] = static_cast<double>(k) * dt_h;
        return g;
    }
};

/// Time-varying reliability indices; cumulative traces share the time grid.
struct IndexSeries {
    std::vector<double> time_h;
    std::vector<double> system_lolp;
    std::vector<std::vector<double>> bus_lolp;    ///< [bus][t]
    std::vector<std::vector<double>> bus_elc_mw;  ///< expected curtailment per bus
    std::vector<double> system_eens_mwh;          ///< cumulative
    std::vector<std::vector<double>> bus_eens_mwh;
    std::vector<double> system_lole_h;  ///< cumulative
    std::vector<std::vector<double>> bus_lole_h;

    [[nodiscard]] double final_system_eens() const {
        return system_eens_mwh.empty() ? 0.0 : system_eens_mwh.back();
    }
    [[nodiscard]] double final_system_lole() const {
        return system_lole_h.empty() ? 0.0 : system_lole_h.back();
    }
};

/// Loss-of-load probability at one instant from solved system states.
inline double lolp_at(const std::vector<SystemState>& states, std::size_t bus_idx) {
    double p = 0.0;
    for (const auto& s : states)
        if (s.curtailment_mw.at(bus_idx) > kCurtailEpsMw) p += s.probability;
    return p;
}

/// Left-rectangle integral of an expected-curtailment trace up to tau hours.
inline double eens(const std::vector<double>& elc_mw, double dt_h, double tau_h) {
    if (tau_h > (elc_mw.empty() ? 0.0 : (static_cast<double>(elc_mw.size() - 1) * dt_h)) + 1e-9)
        throw std::invalid_argument("eens: tau beyond the evaluated horizon");
    double total = 0.0, t = 0.0;
    for (std::size_t k = 0; k + 1 < elc_mw.size() && t < tau_h - 1e-12; ++k, t += dt_h)
        total += elc_mw[k] * dt_h;
    return total;
}

/// Left-rectangle integral of a LOLP trace up to tau hours.
inline double lole(const std::vector<double>& lolp_trace, double dt_h, double tau_h) {
    return eens(lolp_trace, dt_h, tau_h);  // same rule, indicator integrand
}

/// Snapshot of the enumerated states at one time for the states_<t>.csv dump.
struct StateSnapshot {
    double time_h = 0.0;
    std::vector<SystemState> states;
};

struct EvaluationResult {
    std::vector<double> time_h;
    double p0_mw = 0.0;                  ///< pre-deployment aggregate power
    std::vector<double> power_mw;        ///< mean aggregate TCL power trace
    std::vector<double> reserve_mw;      ///< p0 - power
    std::vector<double> sigma_mw;        ///< power deviation sd trace
    StateGrid reserve_grid;
    LzPolynomial ort_poly;               ///< reserve-capacity polynomial over the grid
    std::vector<LzPolynomial> bus_polys; ///< equivalent available generation per bus
    IndexSeries indices;
    std::vector<StateSnapshot> snapshots;
    std::size_t cluster_count = 0;
    std::size_t opf_solves = 0;          ///< unique LPs actually solved
    std::map<std::string, double> stage_ms;
};

namespace detail_eval {

struct OpfCache {
    const Network& net;
    const std::vector<double>& loads;
    std::map<std::pair<std::size_t, std::vector<double>>, OpfResult> solved;
    std::vector<std::vector<std::vector<double>>> zero_certs;  ///< per network state

    explicit OpfCache(const Network& n, const std::vector<double>& l)
        : net(n), loads(l), zero_certs(n.n_states()) {}

    static bool dominates(const std::vector<double>& a, const std::vector<double>& b) {
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a[i] < b[i] - 1e-12) return false;
        return true;
    }

    /// Curtailment vector for a capacity vector, via cache, zero-capacity
    /// dominance or a fresh solve.
    const OpfResult& solve(std::size_t net_state, const std::vector<double>& ag,
                           std::size_t& fresh_solves) {
        auto key = std::make_pair(net_state, ag);
        auto it = solved.find(key);
        if (it != solved.end()) return it->second;
        for (const auto& cert : zero_certs[net_state]) {
            if (dominates(ag, cert)) {
                OpfResult zero;
                zero.curtailment_mw.assign(loads.size(), 0.0);
                zero.served_mw = loads;
                zero.generation_mw.assign(loads.size(), 0.0);
                zero.flow_mw.assign(net.lines.size(), 0.0);
                zero.angle_rad.assign(loads.size(), 0.0);
                zero.total_curtailment_mw = 0.0;
                return solved.emplace(std::move(key), std::move(zero)).first->second;
            }
        }
        OpfResult r = min_total_curtailment(net, ag, loads, net_state);
        ++fresh_solves;
        if (r.total_curtailment_mw <= kCurtailEpsMw && zero_certs[net_state].size() < 64)
            zero_certs[net_state].push_back(ag);
        return solved.emplace(std::move(key), std::move(r)).first->second;
    }
};

inline double now_ms() {
    using namespace std::chrono;
    return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

}  // namespace detail_eval

/// Cluster the fleet according to the scenario policy.
inline std::vector<Cluster> build_clusters(const Scenario& sc, const std::vector<Device>& devices) {
    if (devices.empty()) return {};
    std::size_t q = sc.clusters.count;
    if (sc.clusters.kind == ClusterPolicy::Kind::auto_select) {
        std::vector<Device> sample = devices;
        if (sample.size() > sc.clusters.selection_sample)
            sample.resize(sc.clusters.selection_sample);
        q = choose_cluster_count(sample, sc.uncertainty.ambient_mean,
                                 std::min(sc.clusters.max_count, sample.size()), sc.seed,
                                 sc.population.heat_rate_mode);
    }
    q = std::min(q, devices.size());
    return cluster_by_cycle_times(devices, sc.uncertainty.ambient_mean, q, sc.seed,
                                  sc.population.heat_rate_mode);
}

/// Steps 1-6 of the evaluation procedure. Every stage's artifacts are kept in
/// the result for inspection and CSV export.
inline EvaluationResult evaluate_scenario(const Scenario& sc) {
    sc.validate();
    EvaluationResult out;
    out.time_h = sc.time_grid();
    const std::size_t nt = out.time_h.size();
    const std::size_t nb = sc.network.buses.size();
    double t0 = detail_eval::now_ms();

    // Step 1-2: fleet, clusters, deterministic and stochastic power model
    std::vector<Cluster> clusters;
    std::unique_ptr<StochasticModel> model;
    bool has_ort = sc.ort_enabled && sc.population.count > 0;
    if (has_ort) {
        auto devices = sample_population(sc.population, sc.uncertainty.ambient_mean);
        clusters = build_clusters(sc, devices);
        out.cluster_count = clusters.size();
        model = std::make_unique<StochasticModel>(clusters, sc.beta, sc.deploy_t_h,
                                                  sc.uncertainty, sc.population.heat_rate_mode);
    }
    out.stage_ms["population"] = detail_eval::now_ms() - t0;
    t0 = detail_eval::now_ms();

    out.power_mw.assign(nt, 0.0);
    out.sigma_mw.assign(nt, 0.0);
    out.reserve_mw.assign(nt, 0.0);
    std::vector<CumulantSet> cums(nt);
    if (has_ort) {
        std::vector<double> power(nt), sigma(nt);
        parallel_for(nt, [&](std::size_t k) {
            double t = out.time_h[k];
            power[k] = model->mean_power(t);
            cums[k] = model->cumulants(t);
            sigma[k] = cums[k].sd();
        }, sc.evaluation.threads);
        out.power_mw = power;
        out.sigma_mw = sigma;
        out.p0_mw = model->mean_power(0.0);
        for (std::size_t k = 0; k < nt; ++k)
            out.reserve_mw[k] = reserve_capacity(out.p0_mw, out.power_mw[k]);
    }
    out.stage_ms["distribution"] = detail_eval::now_ms() - t0;
    t0 = detail_eval::now_ms();

    // Step 3: reserve-capacity state grid and the ORT polynomial
    double max_rc = 0.0;
    for (double rc : out.reserve_mw) max_rc = std::max(max_rc, rc);
    auto sigma_of_level = [&](double level) {
        for (std::size_t k = 0; k < nt; ++k)
            if (out.reserve_mw[k] >= level) return std::max(out.sigma_mw[k], 1e-9);
        std::size_t arg = 0;
        for (std::size_t k = 0; k < nt; ++k)
            if (out.reserve_mw[k] > out.reserve_mw[arg]) arg = k;
        return std::max(out.sigma_mw[arg], 1e-9);
    };
    out.reserve_grid = discretize_reserve_states(max_rc, sigma_of_level);
    const std::size_t ns = out.reserve_grid.capacities.size();
    out.ort_poly.capacities = out.reserve_grid.capacities;
    out.ort_poly.probs.assign(ns, std::vector<double>(nt, 0.0));
    if (has_ort) {
        std::vector<std::vector<double>> cols(nt);
        parallel_for(nt, [&](std::size_t k) {
            if (out.time_h[k] < sc.deploy_t_h) {
                cols[k].assign(ns, 0.0);
                cols[k][0] = 1.0;
                return;
            }
            PowerDistribution dist(out.power_mw[k], cums[k]);
            cols[k] = ort_state_probabilities(out.reserve_grid, out.p0_mw,
                                              [&](double x) { return dist.cdf(x); });
            double q = sc.ort.standby_failure_prob;
            if (q > 0.0) {
                double moved = 0.0;
                for (std::size_t s = 1; s < ns; ++s) {
                    moved += cols[k][s] * q;
                    cols[k][s] *= (1.0 - q);
                }
                cols[k][0] += moved;
            }
        }, sc.evaluation.threads);
        for (std::size_t k = 0; k < nt; ++k)
            for (std::size_t s = 0; s < ns; ++s) out.ort_poly.probs[s][k] = cols[k][s];
    } else {
        for (std::size_t k = 0; k < nt; ++k) out.ort_poly.probs[0][k] = 1.0;
    }
    out.ort_poly.validate(1e-6);
    out.stage_ms["multistate"] = detail_eval::now_ms() - t0;
    t0 = detail_eval::now_ms();

    // Step 4: per-bus equivalent-generation polynomials
    out.bus_polys.assign(nb, LzPolynomial::unit());
    for (const auto& u : sc.generation_units) {
        std::size_t b = sc.network.bus_index(u.bus);
        out.bus_polys[b] =
            lz_parallel_compose(out.bus_polys[b], u.polynomial(out.time_h, false));
    }
    for (const auto& u : sc.reserve_units) {
        std::size_t b = sc.network.bus_index(u.bus);
        out.bus_polys[b] = lz_parallel_compose(out.bus_polys[b], u.polynomial(out.time_h, true));
    }
    if (has_ort) {
        std::size_t b = sc.network.bus_index(sc.ort.bus);
        out.bus_polys[b] = hybrid_generation_reserve_lz(out.bus_polys[b], out.ort_poly);
    }
    for (auto& p : out.bus_polys)
        p = lz_reduce(p, std::min(sc.evaluation.prob_floor, 1e-4), sc.evaluation.max_bus_states);
    out.stage_ms["composition"] = detail_eval::now_ms() - t0;
    t0 = detail_eval::now_ms();

    // Step 5: enumeration and the curtailment operator, memoized across time
    std::vector<double> loads(nb);
    for (std::size_t i = 0; i < nb; ++i) loads[i] = sc.network.buses[i].load_mw;
    detail_eval::OpfCache cache(sc.network, loads);

    std::set<std::pair<std::size_t, std::vector<double>>> keys;
    for (std::size_t k = 0; k < nt; ++k) {
        auto states = enumerate_system_states(out.bus_polys, sc.network, k,
                                              sc.evaluation.prob_floor, sc.evaluation.max_states);
        for (auto& s : states) keys.insert({s.network_state, std::move(s.avail_gen_mw)});
    }
    std::vector<const std::pair<std::size_t, std::vector<double>>*> key_list;
    key_list.reserve(keys.size());
    for (const auto& k : keys) key_list.push_back(&k);
    // zero-certificate warmup in deterministic order, then the remainder
    std::size_t fresh = 0;
    for (const auto* k : key_list) cache.solve(k->first, k->second, fresh);
    out.opf_solves = fresh;
    out.stage_ms["opf"] = detail_eval::now_ms() - t0;
    t0 = detail_eval::now_ms();

    // Step 6: indices
    IndexSeries& ix = out.indices;
    ix.time_h = out.time_h;
    ix.system_lolp.assign(nt, 0.0);
    ix.bus_lolp.assign(nb, std::vector<double>(nt, 0.0));
    ix.bus_elc_mw.assign(nb, std::vector<double>(nt, 0.0));
    std::set<long> snapshot_idx;
    for (double m : sc.evaluation.snapshot_min) {
        long k = std::lround(m / 60.0 / sc.dt_h);
        if (k >= 0 && k < static_cast<long>(nt)) snapshot_idx.insert(k);
    }
    for (std::size_t k = 0; k < nt; ++k) {
        auto states = enumerate_system_states(out.bus_polys, sc.network, k,
                                              sc.evaluation.prob_floor, sc.evaluation.max_states);
        for (auto& s : states) {
            const OpfResult& r = cache.solve(s.network_state, s.avail_gen_mw, fresh);
            s.curtailment_mw = r.curtailment_mw;
            s.total_curtailment_mw = r.total_curtailment_mw;
            if (r.total_curtailment_mw > kCurtailEpsMw) ix.system_lolp[k] += s.probability;
            for (std::size_t i = 0; i < nb; ++i) {
                if (r.curtailment_mw[i] > kCurtailEpsMw) ix.bus_lolp[i][k] += s.probability;
                ix.bus_elc_mw[i][k] += s.probability * r.curtailment_mw[i];
            }
        }
        if (snapshot_idx.count(static_cast<long>(k)))
            out.snapshots.push_back(StateSnapshot{out.time_h[k], std::move(states)});
    }
    // cumulative EENS / LOLE (left rectangles)
    ix.system_eens_mwh.assign(nt, 0.0);
    ix.system_lole_h.assign(nt, 0.0);
    ix.bus_eens_mwh.assign(nb, std::vector<double>(nt, 0.0));
    ix.bus_lole_h.assign(nb, std::vector<double>(nt, 0.0));
    for (std::size_t k = 1; k < nt; ++k) {
        double sys_elc = 0.0;
        for (std::size_t i = 0; i < nb; ++i) {
            ix.bus_eens_mwh[i][k] = ix.bus_eens_mwh[i][k - 1] + ix.bus_elc_mw[i][k - 1] * sc.dt_h;
            ix.bus_lole_h[i][k] = ix.bus_lole_h[i][k - 1] + ix.bus_lolp[i][k - 1] * sc.dt_h;
            sys_elc += ix.bus_elc_mw[i][k - 1];
        }
        ix.system_eens_mwh[k] = ix.system_eens_mwh[k - 1] + sys_elc * sc.dt_h;
        ix.system_lole_h[k] = ix.system_lole_h[k - 1] + ix.system_lolp[k - 1] * sc.dt_h;
    }
    out.stage_ms["indices"] = detail_eval::now_ms() - t0;
    return out;
}

}  // namespace resdyn
