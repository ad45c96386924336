#pragma once

// Capacity-state discretization of the reserve distribution and the
// polynomial algebra over multi-state units: capacities live in the exponent,
// time-varying probabilities in the coefficients, parallel composition adds
// capacities and multiplies probabilities.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "resdyn/common.hpp"

namespace resdyn {

/// Multi-state unit as a capacity polynomial. Probabilities are either static
/// (one column) or traces over a shared scenario time grid.
struct LzPolynomial {
    std::vector<double> capacities;           ///< MW, ascending and distinct
    std::vector<std::vector<double>> probs;   ///< [state][time]; single column = static

    [[nodiscard]] std::size_t n_states() const { return capacities.size(); }
    [[nodiscard]] std::size_t n_times() const {
        std::size_t n = 1;
        for (const auto& p : probs) n = std::max(n, p.size());
        return n;
    }
    [[nodiscard]] double prob(std::size_t s, std::size_t k) const {
        const auto& col = probs[s];
        return col.size() == 1 ? col[0] : col[k];
    }

    /// Expected capacity at time index k.
    [[nodiscard]] double expectation(std::size_t k) const {
        double e = 0.0;
        for (std::size_t s = 0; s < n_states(); ++s) e += capacities[s] * prob(s, k);
        return e;
    }

    /// Checks normalization at every time index.
    void validate(double tol = 1e-9) const {
        for (std::size_t k = 0; k < n_times(); ++k) {
            double sum = 0.0;
            for (std::size_t s = 0; s < n_states(); ++s) {
                double p = prob(s, k);
                if (p < -tol) throw std::runtime_error("LzPolynomial: negative probability");
                sum += p;
            }
            if (std::abs(sum - 1.0) > tol)
                throw std::runtime_error("LzPolynomial: probabilities do not sum to 1");
        }
    }

    /// Identity element {1.0 * z^0}.
    static LzPolynomial unit() { return LzPolynomial{{0.0}, {{1.0}}}; }

    /// Static polynomial from (capacity, probability) pairs.
    static LzPolynomial from_states(std::vector<std::pair<double, double>> states) {
        std::sort(states.begin(), states.end());
        LzPolynomial p;
        for (const auto& [c, q] : states) {
            p.capacities.push_back(c);
            p.probs.push_back({q});
        }
        return p;
    }
};

namespace detail {
/// Merge equal capacities (within tol MW) by summing probability columns.
inline LzPolynomial merge_equal_capacities(std::vector<double> caps,
                                           std::vector<std::vector<double>> probs,
                                           double tol = 1e-9) {
    std::vector<std::size_t> order(caps.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return caps[a] < caps[b]; });
    LzPolynomial out;
    for (std::size_t idx : order) {
        if (!out.capacities.empty() && caps[idx] - out.capacities.back() <= tol) {
            auto& dst = out.probs.back();
            auto& src = probs[idx];
            if (dst.size() < src.size()) dst.resize(src.size(), dst.size() == 1 ? dst[0] : 0.0);
            if (src.size() == 1 && dst.size() > 1)
                for (auto& v : dst) v += src[0];
            else
                for (std::size_t k = 0; k < src.size(); ++k) dst[k] += src[k];
        } else {
            out.capacities.push_back(caps[idx]);
            out.probs.push_back(std::move(probs[idx]));
        }
    }
    return out;
}
}  // namespace detail

/// Parallel composition: capacities add, probabilities multiply across all
/// state pairs; equal capacities are merged.
inline LzPolynomial lz_parallel_compose(const LzPolynomial& a, const LzPolynomial& b) {
    std::size_t nt = std::max(a.n_times(), b.n_times());
    std::vector<double> caps;
    std::vector<std::vector<double>> probs;
    caps.reserve(a.n_states() * b.n_states());
    for (std::size_t i = 0; i < a.n_states(); ++i) {
        for (std::size_t j = 0; j < b.n_states(); ++j) {
            caps.push_back(a.capacities[i] + b.capacities[j]);
            bool stat = a.probs[i].size() == 1 && b.probs[j].size() == 1;
            std::vector<double> col(stat ? 1 : nt);
            for (std::size_t k = 0; k < col.size(); ++k) col[k] = a.prob(i, k) * b.prob(j, k);
            probs.push_back(std::move(col));
        }
    }
    return detail::merge_equal_capacities(std::move(caps), std::move(probs));
}

/// Prune low-probability states and cap the state count by merging nearest
/// capacities (probability-weighted), then renormalize.
inline LzPolynomial lz_reduce(const LzPolynomial& poly, double prob_floor,
                              std::size_t max_states = 5000) {
    if (prob_floor < 0.0 || prob_floor > 1e-4)
        throw std::invalid_argument("lz_reduce: prob_floor must be in [0, 1e-4]");
    const std::size_t nt = poly.n_times();
    // expand to a rectangular layout, dropping states below the floor at all times
    std::vector<double> caps;
    std::vector<std::vector<double>> probs;
    for (std::size_t s = 0; s < poly.n_states(); ++s) {
        double peak = 0.0;
        for (std::size_t k = 0; k < nt; ++k) peak = std::max(peak, poly.prob(s, k));
        if (peak < prob_floor && poly.n_states() > 1) continue;
        caps.push_back(poly.capacities[s]);
        std::vector<double> col(nt);
        for (std::size_t k = 0; k < nt; ++k) col[k] = poly.prob(s, k);
        probs.push_back(std::move(col));
    }
    LzPolynomial out = detail::merge_equal_capacities(std::move(caps), std::move(probs));
    // merge nearest-capacity neighbours until under the cap
    while (out.n_states() > max_states) {
        std::size_t best = 0;
        double gap = std::numeric_limits<double>::max();
        for (std::size_t s = 0; s + 1 < out.n_states(); ++s) {
            double g = out.capacities[s + 1] - out.capacities[s];
            if (g < gap) { gap = g; best = s; }
        }
        std::vector<double>& p0 = out.probs[best];
        std::vector<double>& p1 = out.probs[best + 1];
        double w0 = 0.0, w1 = 0.0;
        for (std::size_t k = 0; k < p0.size(); ++k) {
            w0 += p0[k];
            w1 += p1[k];
            p0[k] += p1[k];
        }
        out.capacities[best] =
            (w0 + w1) > 0.0
                ? (out.capacities[best] * w0 + out.capacities[best + 1] * w1) / (w0 + w1)
                : 0.5 * (out.capacities[best] + out.capacities[best + 1]);
        out.capacities.erase(out.capacities.begin() + best + 1);
        out.probs.erase(out.probs.begin() + best + 1);
    }
    for (std::size_t k = 0; k < out.n_times(); ++k) {
        double sum = 0.0;
        for (std::size_t s = 0; s < out.n_states(); ++s) sum += out.prob(s, k);
        if (sum <= 0.0) continue;
        for (std::size_t s = 0; s < out.n_states(); ++s)
            if (out.probs[s].size() > k) out.probs[s][k] /= sum;
    }
    return out;
}

/// Reserve-capacity state grid: levels from zero upward with spacings equal
/// to the local standard deviation of the reserve distribution (floored at
/// max_rc/50), topped off at or above max_rc.
struct StateGrid {
    std::vector<double> capacities;  ///< MW, ascending, first is 0
    std::vector<double> spacings;    ///< spacings[j] = capacities[j+1] - capacities[j]; last repeats
};

inline StateGrid discretize_reserve_states(double max_rc,
                                           const std::function<double(double)>& sigma_of_level) {
    if (max_rc < 0.0) throw std::invalid_argument("discretize_reserve_states: max_rc must be >= 0");
    StateGrid g;
    g.capacities.push_back(0.0);
    if (max_rc <= 0.0) {
        g.spacings.push_back(0.0);
        return g;
    }
    const double floor_sigma = max_rc / 50.0;
    while (g.capacities.back() < max_rc - 1e-12) {
        double s = std::max(sigma_of_level(g.capacities.back()), floor_sigma);
        g.capacities.push_back(g.capacities.back() + s);
        g.spacings.push_back(s);
    }
    g.spacings.push_back(g.spacings.empty() ? floor_sigma : g.spacings.back());
    return g;
}

/// State probabilities of the reserve grid at one instant from the power CDF:
/// rho_j = F(P0 - RC_j + tau_j) - F(P0 - RC_j), with the two tail masses
/// assigned to the extreme states and the vector normalized. Lower band edges
/// are evaluated a hair to the left so that an atom sitting exactly on a state
/// edge counts toward that state (relevant only for degenerate distributions).
inline std::vector<double> ort_state_probabilities(const StateGrid& grid, double p0_mw,
                                                   const std::function<double(double)>& cdf) {
    const std::size_t n = grid.capacities.size();
    const double eps = 1e-9;
    std::vector<double> rho(n, 0.0);
    if (n == 1) {
        rho[0] = 1.0;
        return rho;
    }
    for (std::size_t j = 0; j < n; ++j) {
        double edge = p0_mw - grid.capacities[j];
        rho[j] = cdf(edge + grid.spacings[j] - eps) - cdf(edge - eps);
    }
    rho.front() += 1.0 - cdf(p0_mw - grid.capacities.front() + grid.spacings.front() - eps);
    rho.back() += cdf(p0_mw - grid.capacities.back() - eps);
    double sum = 0.0;
    for (double& r : rho) {
        r = std::max(r, 0.0);
        sum += r;
    }
    if (sum <= 0.0) {
        rho.assign(n, 0.0);
        rho[0] = 1.0;
        return rho;
    }
    for (double& r : rho) r /= sum;
    return rho;
}

/// Two-state Markov availability started at t = 0. From the up state:
/// A(t) = mu/(lambda+mu) + lambda/(lambda+mu) * exp(-(lambda+mu) t).
inline double unit_availability(double lambda, double mu, double t, bool initial_up = true) {
    if (lambda < 0.0 || mu < 0.0)
        throw std::invalid_argument("unit_availability: rates must be >= 0");
    double s = lambda + mu;
    if (s == 0.0) return initial_up ? 1.0 : 0.0;
    double steady = mu / s;
    if (initial_up) return steady + (lambda / s) * std::exp(-s * t);
    return steady - steady * std::exp(-s * t);
}

/// Piecewise-linear turbine power curve: zero below cut-in and at/above
/// cut-out, linear ramp up to the rated speed, rated in between.
inline double wind_power_from_speed(double v, double cut_in, double rated_speed, double cut_out,
                                    double rated_mw) {
    if (v < cut_in || v >= cut_out) return 0.0;
    if (v >= rated_speed) return rated_mw;
    return rated_mw * (v - cut_in) / (rated_speed - cut_in);
}

/// One generation or reserve unit described either by a static state table or
/// by a two-state Markov transient.
struct MultiStateUnit {
    enum class Kind { markov_two_state, state_table };
    Kind kind = Kind::markov_two_state;
    int bus = 0;
    double capacity_mw = 0.0;  ///< up-state capacity for markov units
    double lambda_per_h = 0.0;
    double mu_per_h = 0.0;
    bool initial_up = true;
    std::vector<std::pair<double, double>> states;  ///< (capacity, probability) for tables
    // reserve-provider scheduling; ignored for always-on generation units
    double commit_h = 0.0;
    double lead_h = 0.0;

    /// Polynomial over the scenario grid (times in hours). For reserve
    /// providers, zero capacity with probability 1 before commit + lead; the
    /// Markov clock starts when the unit comes online.
    [[nodiscard]] LzPolynomial polynomial(const std::vector<double>& grid_h,
                                          bool scheduled_reserve) const {
        if (kind == Kind::state_table) {
            if (!scheduled_reserve) return LzPolynomial::from_states(states);
            LzPolynomial base = LzPolynomial::from_states(states);
            LzPolynomial out = base;
            for (auto& col : out.probs) col.assign(grid_h.size(), 0.0);
            std::size_t zero_idx = 0;  // from_states sorts ascending; ensure a zero state exists
            if (base.capacities.front() != 0.0) {
                out.capacities.insert(out.capacities.begin(), 0.0);
                out.probs.insert(out.probs.begin(), std::vector<double>(grid_h.size(), 0.0));
                base.capacities.insert(base.capacities.begin(), 0.0);
                base.probs.insert(base.probs.begin(), {0.0});
            }
            for (std::size_t k = 0; k < grid_h.size(); ++k) {
                bool online = grid_h[k] >= commit_h + lead_h;
                for (std::size_t s = 0; s < out.capacities.size(); ++s)
                    out.probs[s][k] = online ? base.prob(s, 0) : (s == zero_idx ? 1.0 : 0.0);
            }
            return out;
        }
        LzPolynomial out;
        out.capacities = {0.0, capacity_mw};
        out.probs.assign(2, std::vector<double>(grid_h.size(), 0.0));
        for (std::size_t k = 0; k < grid_h.size(); ++k) {
            double a;
            if (scheduled_reserve) {
                double online_at = commit_h + lead_h;
                a = grid_h[k] >= online_at
                        ? unit_availability(lambda_per_h, mu_per_h, grid_h[k] - online_at, initial_up)
                        : 0.0;
            } else {
                a = unit_availability(lambda_per_h, mu_per_h, grid_h[k], initial_up);
            }
            out.probs[0][k] = 1.0 - a;
            out.probs[1][k] = a;
        }
        return out;
    }
};

/// Hybrid operating reserve at one bus: the TCL polynomial composed with every
/// scheduled conventional reserve unit.
inline LzPolynomial hybrid_reserve_lz(const LzPolynomial& ort,
                                      const std::vector<MultiStateUnit>& conventional,
                                      const std::vector<double>& grid_h) {
    LzPolynomial acc = ort;
    for (const auto& u : conventional)
        acc = lz_parallel_compose(acc, u.polynomial(grid_h, /*scheduled_reserve=*/true));
    return acc;
}

/// Hybrid generation-and-reserve provider: plain parallel composition; the
/// exponent becomes the equivalent available generation.
inline LzPolynomial hybrid_generation_reserve_lz(const LzPolynomial& generation,
                                                 const LzPolynomial& reserve) {
    return lz_parallel_compose(generation, reserve);
}

}  // namespace resdyn
