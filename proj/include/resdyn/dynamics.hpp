#pragma once

// Per-cluster migration timeline after a setpoint raise and the analytical
// aggregate power / reserve trajectory. The timeline is a sequence of
// intervals, each carrying affine expressions for the expected ON and OFF
// durations as functions of time since deployment.

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "resdyn/common.hpp"
#include "resdyn/population.hpp"
#include "resdyn/thermal.hpp"

namespace resdyn {

/// Structural role of a timeline interval. The enumerators name what the
/// cluster population is doing inside the interval.
enum class PieceKind {
    pre_steady,    ///< before deployment, old-band steady cycling
    on_drain,      ///< ON cohort draining, OFF cohort drifting up
    all_off,       ///< every device OFF (short base ON time)
    delay_elapsed, ///< first devices reached the new upper edge before the ON cohort drained
    refill,        ///< devices re-entering ON at the new band
    gap_hold,      ///< old cohort still cycling in, duty steady above final level
    gap_refill,    ///< trailing OFF cohort filling the new band
    drain_tail,    ///< no-gap path: residual old cohort draining
    new_steady     ///< new-band steady cycling
};

/// Which structural path the migration takes: the ON cohort either drains
/// before or after the first OFF device reaches the new upper edge, and the
/// old cycle is either shorter (gap) or longer (no gap) than the new one.
enum class MigrationPath { c1_gap, c1_nogap, c2_gap, c2_nogap };

/// One timeline interval with affine on/off-duration expressions in
/// dt = t - t_s (hours). Bounds are half-open [lower, upper).
struct IntervalPiece {
    PieceKind kind = PieceKind::pre_steady;
    int index = 0;  ///< position within the timeline
    double lower = 0.0;
    double upper = 0.0;
    double on_c0 = 0.0, on_c1 = 0.0;    ///< T_on(dt) = on_c0 + on_c1 * dt
    double off_c0 = 0.0, off_c1 = 0.0;  ///< T_off(dt) = off_c0 + off_c1 * dt

    /// Evaluate with clamping: T_on >= 0, T_off >= kMinOffTimeHours.
    [[nodiscard]] CycleTimes evaluate(double dt) const {
        double t_on = std::max(0.0, on_c0 + on_c1 * dt);
        double t_off = std::max(kMinOffTimeHours, off_c0 + off_c1 * dt);
        return CycleTimes{t_on, t_off};
    }
};

struct MigrationTimeline {
    double t_s = 0.0;   ///< deployment time, hours
    double beta = 0.0;  ///< setpoint raise, degC
    CycleTimes base_times;
    CycleTimes new_times;
    double delay = 0.0;  ///< OFF-drift time from old to new upper edge, hours
    MigrationPath path = MigrationPath::c1_gap;
    std::vector<IntervalPiece> pieces;     ///< cover (-inf, +inf), ordered
    std::vector<double> breakpoints;       ///< finite interior bounds after t_s, hours rel. t_s
    double nogap_junction_jump = 0.0;      ///< |T_off| discontinuity into the final piece (no-gap path)

    /// Piece containing dt = t - t_s.
    [[nodiscard]] const IntervalPiece& piece_at(double dt) const {
        for (const auto& p : pieces)
            if (dt < p.upper) return p;
        return pieces.back();
    }

    /// Piece of a given structural kind, if the path includes it.
    [[nodiscard]] const IntervalPiece* piece_of_kind(PieceKind k) const {
        for (const auto& p : pieces)
            if (p.kind == k) return &p;
        return nullptr;
    }
};

/// Duty cycle from on/off durations; degenerate all-zero input yields 0 and
/// sets the flag when provided.
inline double cluster_duty(double t_on, double t_off, bool* degenerate = nullptr) {
    if (degenerate) *degenerate = false;
    if (t_on <= 0.0 && t_off <= 0.0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    double d = t_on / (t_on + t_off);
    return std::min(1.0, std::max(0.0, d));
}

/// Build the migration timeline for one device (a cluster representative).
inline MigrationTimeline build_timeline(const DeviceParams& params, const HysteresisBand& band,
                                        double beta, double ambient, double t_s,
                                        HeatRateMode mode = HeatRateMode::cop_times_p) {
    if (!(beta > 0.0)) throw std::invalid_argument("build_timeline: beta must be > 0");

    MigrationTimeline tl;
    tl.t_s = t_s;
    tl.beta = beta;
    tl.base_times = steady_cycle_times(params, band, ambient, mode);
    tl.new_times = shifted_cycle_times(params, band, ambient, beta, mode);
    tl.delay = migration_delay(params, band, ambient, beta, mode);

    const double t_on0 = tl.base_times.t_on, t_off0 = tl.base_times.t_off;
    const double t_onn = tl.new_times.t_on, t_offn = tl.new_times.t_off;
    const double d = tl.delay;
    const double cyc0 = t_on0 + t_off0;
    const double cycn = t_onn + t_offn;
    const double inf = std::numeric_limits<double>::infinity();

    // Equality within 1e-9 h counts as the no-gap path.
    const bool gap = cyc0 < cycn - 1e-9;
    const bool c1 = t_on0 < d;
    tl.path = c1 ? (gap ? MigrationPath::c1_gap : MigrationPath::c1_nogap)
                 : (gap ? MigrationPath::c2_gap : MigrationPath::c2_nogap);

    std::vector<IntervalPiece> ps;
    auto add = [&ps](PieceKind k, double lo, double hi, double on0, double on1, double off0,
                     double off1) {
        ps.push_back(IntervalPiece{k, 0, lo, hi, on0, on1, off0, off1});
    };

    add(PieceKind::pre_steady, -inf, 0.0, t_on0, 0.0, t_off0, 0.0);
    add(PieceKind::on_drain, 0.0, std::min(d, t_on0), t_on0, -1.0, t_off0, 1.0);
    if (c1) {
        add(PieceKind::all_off, t_on0, d, 0.0, 0.0, t_off0 + t_on0, 0.0);
    } else if (d < t_on0) {
        add(PieceKind::delay_elapsed, d, t_on0, t_on0 - d, 0.0, t_off0 + d, 0.0);
    }
    add(PieceKind::refill, std::max(d, t_on0), d + t_onn, -d, 1.0, t_off0 + t_on0 + d, -1.0);
    double last;
    if (gap) {
        add(PieceKind::gap_hold, d + t_onn, cyc0 + d, t_onn, 0.0, t_off0 + t_on0 - t_onn, 0.0);
        add(PieceKind::gap_refill, cyc0 + d, cycn + d, t_onn, 0.0, -d - t_onn, 1.0);
        last = cycn + d;
    } else {
        add(PieceKind::drain_tail, d + t_onn, cyc0 - t_onn + d, t_onn, 0.0,
            t_off0 + t_on0 + d, -1.0);
        last = cyc0 - t_onn + d;
        // The drain-tail expression ends at T_off = t_onn while the steady
        // piece starts at t_offn; the jump is recorded, not smoothed away.
        tl.nogap_junction_jump = std::abs(t_onn - t_offn);
    }
    add(PieceKind::new_steady, last, inf, t_onn, 0.0, t_offn, 0.0);

    // Drop empty intervals (coincident bounds) and force contiguous coverage.
    std::vector<IntervalPiece> kept;
    for (auto& p : ps) {
        if (p.upper - p.lower <= 1e-9 && std::isfinite(p.upper)) continue;
        if (!kept.empty()) p.lower = kept.back().upper;
        if (std::isfinite(p.upper) && p.upper <= p.lower) continue;
        kept.push_back(p);
    }
    for (std::size_t i = 0; i < kept.size(); ++i) kept[i].index = static_cast<int>(i);
    tl.pieces = std::move(kept);
    for (const auto& p : tl.pieces)
        if (p.upper > 0.0 && std::isfinite(p.upper)) tl.breakpoints.push_back(p.upper);
    return tl;
}

inline MigrationTimeline build_timeline(const Cluster& cluster, double beta, double ambient,
                                        double t_s, HeatRateMode mode = HeatRateMode::cop_times_p) {
    return build_timeline(cluster.representative.params, cluster.representative.band, beta,
                          ambient, t_s, mode);
}

/// Expected on/off durations at absolute time t (hours), clamped.
inline CycleTimes expected_cycle_times(const MigrationTimeline& tl, double t) {
    return tl.piece_at(t - tl.t_s).evaluate(t - tl.t_s);
}

/// Deterministic aggregate power of the clustered fleet at time t, MW.
inline double aggregate_power(const std::vector<Cluster>& clusters,
                              const std::vector<MigrationTimeline>& timelines, double t) {
    if (clusters.size() != timelines.size())
        throw std::invalid_argument("aggregate_power: one timeline per cluster required");
    double kw = 0.0;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        CycleTimes ct = expected_cycle_times(timelines[c], t);
        kw += cluster_duty(ct.t_on, ct.t_off) * clusters[c].member_power_sum;
    }
    return kw / 1000.0;
}

/// Reserve capacity: baseline power minus current power, MW.
inline double reserve_capacity(double p0_mw, double p_t_mw) { return p0_mw - p_t_mw; }

}  // namespace resdyn
