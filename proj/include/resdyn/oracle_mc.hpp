#pragma once

// Sampling-based reliability indices: replicated device-level fleet
// simulations provide the TCL power distribution, unit states are sampled
// from their transient availabilities, and every sampled system state goes
// through the same curtailment operator as the analytical path.

#include <random>

#include "resdyn/oracle.hpp"
#include "resdyn/reliability.hpp"

namespace resdyn {

struct McIndexResult {
    IndexSeries indices;
    std::vector<double> lolp_se;        ///< binomial standard error of system LOLP
    std::vector<double> mean_power_mw;  ///< across replications
    std::vector<double> p0_mw;          ///< measured baseline per replication
    std::size_t replications = 0;
    std::size_t samples = 0;
};

/// Replicated fleet traces with sampled ambient / setpoint deviations.
/// Replication r uses an independent counter-derived seed stream, so parallel
/// and serial runs agree exactly.
inline std::vector<FleetTrace> replicate_fleet(const Scenario& sc, std::uint64_t seed,
                                               std::vector<double>* p0_out = nullptr) {
    auto devices = sample_population(sc.population, sc.uncertainty.ambient_mean);
    if (sc.mc.fleet_subsample > 0 && devices.size() > sc.mc.fleet_subsample)
        devices.resize(sc.mc.fleet_subsample);
    const double scale =
        sc.population.count > 0 && !devices.empty()
            ? static_cast<double>(sc.population.count) / static_cast<double>(devices.size())
            : 1.0;

    const std::size_t reps = std::max<std::size_t>(1, sc.mc.replications);
    std::vector<FleetTrace> traces(reps);
    if (p0_out) p0_out->assign(reps, 0.0);
    std::vector<std::size_t> idx(reps);
    for (std::size_t r = 0; r < reps; ++r) idx[r] = r;
    parallel_for(reps, [&](std::size_t r) {
        std::mt19937_64 rng(derive_seed(seed, 0x7265706cULL + r));
        double da = sc.uncertainty.ambient_dev.sample(rng);
        double ds = sc.uncertainty.setpoint_dev.sample(rng);
        std::vector<Device> devs = devices;
        for (auto& d : devs) d.band.setpoint += ds;
        FleetSimOptions o;
        o.dt_s = sc.mc.dt_s;
        o.record_dt_min = sc.dt_h * 60.0;
        o.horizon_h = sc.horizon_h;
        o.t_s = sc.deploy_t_h;
        o.beta = sc.beta;
        o.threads = 1;  // parallelism lives at the replication level
        double ambient = sc.uncertainty.ambient_mean + da;
        traces[r] = simulate_fleet(devs, [ambient](double) { return ambient; }, o,
                                   derive_seed(seed, 0x666c72ULL + r));
        for (auto& p : traces[r].power_mw) p *= scale;
    }, sc.evaluation.threads);
    if (p0_out) {
        for (std::size_t r = 0; r < reps; ++r) {
            // measured pre-deployment baseline of this replication
            double sum = 0.0;
            std::size_t n = 0;
            for (std::size_t k = 0; k < traces[r].time_h.size(); ++k)
                if (traces[r].time_h[k] < sc.deploy_t_h) { sum += traces[r].power_mw[k]; ++n; }
            (*p0_out)[r] = n ? sum / static_cast<double>(n) : 0.0;
        }
    }
    return traces;
}

/// Monte Carlo reliability evaluation: at every grid instant, sample joint
/// unit states and a TCL replication, run the curtailment operator, average
/// the indicators. Per-instant sampling is unbiased for LOLP/EENS/LOLE since
/// those are marginal-in-time indices.
inline McIndexResult mc_reliability(const Scenario& sc, std::size_t samples, std::uint64_t seed) {
    sc.validate();
    McIndexResult out;
    out.samples = samples;
    const auto grid = sc.time_grid();
    const std::size_t nt = grid.size();
    const std::size_t nb = sc.network.buses.size();

    bool has_ort = sc.ort_enabled && sc.population.count > 0;
    std::vector<FleetTrace> traces;
    std::vector<double> p0;
    if (has_ort) {
        traces = replicate_fleet(sc, seed, &p0);
        out.replications = traces.size();
        out.p0_mw.assign(p0.begin(), p0.end());
        out.mean_power_mw.assign(nt, 0.0);
        for (const auto& tr : traces)
            for (std::size_t k = 0; k < nt && k < tr.power_mw.size(); ++k)
                out.mean_power_mw[k] += tr.power_mw[k] / static_cast<double>(traces.size());
    }

    std::vector<double> loads(nb);
    for (std::size_t i = 0; i < nb; ++i) loads[i] = sc.network.buses[i].load_mw;
    detail_eval::OpfCache cache(sc.network, loads);
    std::size_t fresh = 0;

    std::size_t ort_bus_idx = has_ort ? sc.network.bus_index(sc.ort.bus) : 0;

    IndexSeries& ix = out.indices;
    ix.time_h = grid;
    ix.system_lolp.assign(nt, 0.0);
    ix.bus_lolp.assign(nb, std::vector<double>(nt, 0.0));
    ix.bus_elc_mw.assign(nb, std::vector<double>(nt, 0.0));
    out.lolp_se.assign(nt, 0.0);

    // per-instant sampling; the RC axis is quantized to 0.01 MW so repeated
    // samples hit the OPF cache
    for (std::size_t k = 0; k < nt; ++k) {
        std::mt19937_64 rng(derive_seed(seed, 0x6d63ULL * 1000003 + k));
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        double t = grid[k];
        std::size_t hits = 0;
        for (std::size_t s = 0; s < samples; ++s) {
            std::size_t js = 0;
            if (sc.network.n_states() > 1) {
                double r = u01(rng), acc = 0.0;
                for (std::size_t j = 0; j < sc.network.n_states(); ++j) {
                    acc += sc.network.state(j).probability;
                    if (r < acc) { js = j; break; }
                }
            }
            std::vector<double> ag(nb, 0.0);
            for (const auto& unit : sc.generation_units) {
                std::size_t b = sc.network.bus_index(unit.bus);
                if (unit.kind == MultiStateUnit::Kind::markov_two_state) {
                    double a = unit_availability(unit.lambda_per_h, unit.mu_per_h, t,
                                                 unit.initial_up);
                    if (u01(rng) < a) ag[b] += unit.capacity_mw;
                } else {
                    double r = u01(rng), acc = 0.0;
                    for (const auto& [cap, pr] : unit.states) {
                        acc += pr;
                        if (r < acc) { ag[b] += cap; break; }
                    }
                }
            }
            for (const auto& unit : sc.reserve_units) {
                std::size_t b = sc.network.bus_index(unit.bus);
                double online_at = unit.commit_h + unit.lead_h;
                if (t < online_at) continue;
                double a = unit_availability(unit.lambda_per_h, unit.mu_per_h, t - online_at,
                                             unit.initial_up);
                if (u01(rng) < a) ag[b] += unit.capacity_mw;
            }
            if (has_ort) {
                std::size_t r = static_cast<std::size_t>(u01(rng) * traces.size());
                if (r >= traces.size()) r = traces.size() - 1;
                double rc = 0.0;
                if (t >= sc.deploy_t_h && sc.ort.standby_failure_prob < u01(rng))
                    rc = std::max(0.0, p0[r] - traces[r].power_mw[std::min(k, traces[r].power_mw.size() - 1)]);
                ag[ort_bus_idx] += std::floor(rc * 100.0) / 100.0;
            }
            const OpfResult& res = cache.solve(js, ag, fresh);
            if (res.total_curtailment_mw > kCurtailEpsMw) ++hits;
            for (std::size_t i = 0; i < nb; ++i) {
                if (res.curtailment_mw[i] > kCurtailEpsMw)
                    ix.bus_lolp[i][k] += 1.0 / static_cast<double>(samples);
                ix.bus_elc_mw[i][k] += res.curtailment_mw[i] / static_cast<double>(samples);
            }
        }
        double p = static_cast<double>(hits) / static_cast<double>(samples);
        ix.system_lolp[k] = p;
        out.lolp_se[k] = std::sqrt(std::max(0.0, p * (1.0 - p) / static_cast<double>(samples)));
    }

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
    return out;
}

}  // namespace resdyn
