#pragma once

// Device-level Monte Carlo fleet simulation. This is the ground-truth side of
// the library: it time-steps every device through the thermostat rule and the
// band migration instead of using the analytical timeline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "resdyn/common.hpp"
#include "resdyn/population.hpp"
#include "resdyn/thermal.hpp"

namespace resdyn {

using AmbientTrace = std::function<double(double)>;  ///< hours -> degC

struct FleetSimOptions {
    double dt_s = 1.0;           ///< integration step, seconds (<= 10)
    double record_dt_min = 1.0;  ///< recording grid, minutes
    double horizon_h = 4.0;
    double t_s = 1.0;            ///< deployment time, hours
    double beta = 0.0;           ///< setpoint raise at t_s, degC (0 = no deployment)
    unsigned threads = 0;        ///< 0 = hardware default
};

struct FleetTrace {
    std::vector<double> time_h;
    std::vector<double> power_mw;
    std::vector<std::vector<double>> group_power_mw;  ///< per group, when groups given
    std::uint64_t seed = 0;
    std::size_t excluded_devices = 0;  ///< infeasible devices skipped
};

/// Simulate a fleet. Initial phases are uniform over each device's steady
/// cycle. At t_s the band shifts up by beta: OFF devices immediately target
/// the new upper edge, ON devices finish their leg to the old lower edge and
/// adopt the new band at that switch. No device is force-switched at t_s.
inline FleetTrace simulate_fleet(const std::vector<Device>& devices, const AmbientTrace& ambient,
                                 const FleetSimOptions& opts, std::uint64_t seed,
                                 const std::vector<std::uint32_t>* groups = nullptr,
                                 std::size_t n_groups = 0) {
    if (!(opts.dt_s > 0.0) || opts.dt_s > 10.0)
        throw std::invalid_argument("simulate_fleet: dt_s must be in (0, 10] seconds");
    if (groups && groups->size() != devices.size())
        throw std::invalid_argument("simulate_fleet: group labels must match device count");

    const std::size_t n = devices.size();
    const double dt_h = opts.dt_s / 3600.0;
    const std::size_t steps = static_cast<std::size_t>(std::llround(opts.horizon_h / dt_h));
    const std::size_t rec_every =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opts.record_dt_min * 60.0 / opts.dt_s)));
    const std::size_t n_rec = steps / rec_every + 1;

    FleetTrace trace;
    trace.seed = seed;
    trace.time_h.resize(n_rec);
    for (std::size_t k = 0; k < n_rec; ++k) trace.time_h[k] = static_cast<double>(k * rec_every) * dt_h;
    trace.power_mw.assign(n_rec, 0.0);
    if (groups) trace.group_power_mw.assign(n_groups, std::vector<double>(n_rec, 0.0));

    // Per-device state, initialized serially for determinism.
    std::vector<double> theta(n), decay(n), rq(n), low0(n), hi0(n), pw(n);
    std::vector<char> mode(n), pending(n, 0), alive(n, 1);
    const double tha0 = ambient(0.0);
    std::mt19937_64 rng(derive_seed(seed, 0x666c656574ULL));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const Device& d = devices[i];
        rq[i] = d.params.R * d.params.heat_rate();
        decay[i] = std::exp(-dt_h / (d.params.C * d.params.R));
        low0[i] = d.band.lower();
        hi0[i] = d.band.upper();
        pw[i] = d.params.p;
        double u = unif(rng);
        if (!device_feasible(d.params, d.band, tha0)) {
            alive[i] = 0;
            ++trace.excluded_devices;
            theta[i] = d.band.setpoint;
            mode[i] = 0;
            continue;
        }
        CycleTimes ct = steady_cycle_times(d.params, d.band, tha0);
        double phase = u * (ct.t_on + ct.t_off);
        double cr = d.params.C * d.params.R;
        if (phase < ct.t_on) {  // cooling from the upper edge
            mode[i] = 1;
            double eq = tha0 - rq[i];
            theta[i] = eq + (hi0[i] - eq) * std::exp(-phase / cr);
        } else {  // warming from the lower edge
            mode[i] = 0;
            theta[i] = tha0 + (low0[i] - tha0) * std::exp(-(phase - ct.t_on) / cr);
        }
    }

    const bool deploy = opts.beta > 0.0;
    const std::size_t shift_step =
        deploy ? static_cast<std::size_t>(std::llround(opts.t_s / dt_h)) : steps + 1;

    // Fixed-size device chunks walked in parallel; the chunk layout and the
    // chunk-order reduction do not depend on the thread count, so serial and
    // parallel runs produce identical sums.
    unsigned hw = std::thread::hardware_concurrency();
    unsigned nt = opts.threads ? opts.threads : (hw ? hw : 1u);
    nt = std::max(1u, std::min<unsigned>(nt, 16));
    const std::size_t chunk = 4096;
    std::size_t n_chunks = (n + chunk - 1) / chunk;

    std::vector<std::vector<double>> chunk_power(n_chunks, std::vector<double>(n_rec, 0.0));
    std::vector<std::vector<std::vector<double>>> chunk_group;
    if (groups)
        chunk_group.assign(n_chunks, std::vector<std::vector<double>>(n_groups, std::vector<double>(n_rec, 0.0)));

    parallel_for(n_chunks, [&](std::size_t ci) {
        std::size_t lo = ci * chunk, hi_i = std::min(n, lo + chunk);
        auto& prec = chunk_power[ci];
        for (std::size_t k = 0; k <= steps; ++k) {
            double t = static_cast<double>(k) * dt_h;
            if (k % rec_every == 0) {
                std::size_t r = k / rec_every;
                double kw = 0.0;
                for (std::size_t i = lo; i < hi_i; ++i)
                    if (alive[i] && mode[i]) {
                        kw += pw[i];
                        if (groups) chunk_group[ci][(*groups)[i]][r] += pw[i];
                    }
                prec[r] += kw;
            }
            if (k == steps) break;
            const bool at_shift = deploy && k == shift_step;
            const double tha = ambient(t);
            for (std::size_t i = lo; i < hi_i; ++i) {
                if (!alive[i]) continue;
                if (at_shift) {
                    if (mode[i]) {
                        pending[i] = 1;  // finish the ON leg to the old lower edge
                    } else {
                        low0[i] += opts.beta;
                    }
                    hi0[i] += opts.beta;
                }
                double eq = mode[i] ? tha - rq[i] : tha;
                theta[i] = eq + (theta[i] - eq) * decay[i];
                if (mode[i]) {
                    // pending devices still hold the old lower threshold in low0
                    if (theta[i] < low0[i]) {
                        mode[i] = 0;
                        if (pending[i]) {
                            low0[i] += opts.beta;
                            pending[i] = 0;
                        }
                    }
                } else if (theta[i] > hi0[i]) {
                    mode[i] = 1;
                }
            }
        }
    }, nt);

    for (std::size_t ci = 0; ci < n_chunks; ++ci) {
        for (std::size_t r = 0; r < n_rec; ++r) trace.power_mw[r] += chunk_power[ci][r] / 1000.0;
        if (groups)
            for (std::size_t g = 0; g < n_groups; ++g)
                for (std::size_t r = 0; r < n_rec; ++r)
                    trace.group_power_mw[g][r] += chunk_group[ci][g][r] / 1000.0;
    }
    return trace;
}

/// Mean simulated ON/OFF durations of one device over `n_cycles` steady
/// cycles (no deployment), measured from switch events.
inline CycleTimes measure_steady_cycle_times(const Device& d, double ambient, double dt_s,
                                             int n_cycles, std::uint64_t seed) {
    if (!(dt_s > 0.0)) throw std::invalid_argument("measure_steady_cycle_times: dt_s must be > 0");
    std::mt19937_64 rng(derive_seed(seed, 0x6379636c65ULL));
    CycleTimes ct = steady_cycle_times(d.params, d.band, ambient);
    double phase = std::uniform_real_distribution<double>(0.0, 1.0)(rng) * (ct.t_on + ct.t_off);
    double cr = d.params.C * d.params.R;
    double rq = d.params.R * d.params.heat_rate();
    DeviceState s;
    if (phase < ct.t_on) {
        s.mode = 1;
        s.theta = (ambient - rq) + (d.band.upper() - (ambient - rq)) * std::exp(-phase / cr);
    } else {
        s.mode = 0;
        s.theta = ambient + (d.band.lower() - ambient) * std::exp(-(phase - ct.t_on) / cr);
    }
    double dt_h = dt_s / 3600.0;
    double decay = std::exp(-dt_h / cr);
    double t = 0.0, leg_start = 0.0;
    bool first_leg = true;  // the initial partial leg is discarded
    double on_sum = 0.0, off_sum = 0.0;
    int on_n = 0, off_n = 0;
    while (on_n < n_cycles || off_n < n_cycles) {
        double eq = s.mode ? ambient - rq : ambient;
        s.theta = eq + (s.theta - eq) * decay;
        t += dt_h;
        int m = mode_update(s.theta, s.mode, d.band);
        if (m != s.mode) {
            if (!first_leg) {
                if (s.mode == 1 && on_n < n_cycles) { on_sum += t - leg_start; ++on_n; }
                if (s.mode == 0 && off_n < n_cycles) { off_sum += t - leg_start; ++off_n; }
            }
            first_leg = false;
            leg_start = t;
            s.mode = m;
        }
        if (t > 10000.0) throw std::runtime_error("measure_steady_cycle_times: device not cycling");
    }
    return CycleTimes{on_sum / n_cycles, off_sum / n_cycles};
}

/// Step empirical CDF with a Kolmogorov-Smirnov comparison helper.
struct EmpiricalCdf {
    std::vector<double> sorted;

    explicit EmpiricalCdf(std::vector<double> samples) : sorted(std::move(samples)) {
        if (sorted.size() < 1) throw std::invalid_argument("EmpiricalCdf: need samples");
        std::sort(sorted.begin(), sorted.end());
    }

    [[nodiscard]] double operator()(double x) const {
        auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
        return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
    }

    /// sup_x |F_emp(x) - F(x)| evaluated at the sample points (both sides).
    [[nodiscard]] double ks_distance(const std::function<double(double)>& cdf) const {
        double ks = 0.0;
        const double n = static_cast<double>(sorted.size());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            double f = cdf(sorted[i]);
            ks = std::max(ks, std::abs(f - static_cast<double>(i + 1) / n));
            ks = std::max(ks, std::abs(f - static_cast<double>(i) / n));
        }
        return ks;
    }
};

inline EmpiricalCdf empirical_distribution(std::vector<double> samples) {
    if (samples.size() < 100)
        throw std::invalid_argument("empirical_distribution: need at least 100 samples");
    return EmpiricalCdf(std::move(samples));
}

}  // namespace resdyn
