#pragma once

// Propagation of ambient and setpoint uncertainty into a time-varying
// distribution of aggregate power: interval probabilities from breakpoint
// endpoint distributions, first-order duty sensitivities, cumulants of the
// power deviation and a Gram-Charlier Type A density/CDF.

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "resdyn/common.hpp"
#include "resdyn/dynamics.hpp"
#include "resdyn/population.hpp"

namespace resdyn {

struct UncertaintySpec {
    double ambient_mean = 32.0;         ///< forecast mean ambient, degC
    ParamDist ambient_dev = ParamDist::normal(0.0, 1.0);   ///< zero-mean deviation
    ParamDist setpoint_dev = ParamDist::normal(0.0, 0.5);  ///< zero-mean, common across clusters
    int cumulant_order = 6;             ///< even, in [2, 8]

    void validate() const {
        if (cumulant_order < 2 || cumulant_order > 8 || cumulant_order % 2 != 0)
            throw std::invalid_argument("UncertaintySpec: cumulant_order must be even in [2,8]");
        if (ambient_dev.kind == ParamDist::Kind::normal && ambient_dev.a != 0.0)
            throw std::invalid_argument("UncertaintySpec: ambient deviation must be zero-mean");
        if (ambient_dev.kind == ParamDist::Kind::uniform && ambient_dev.a != -ambient_dev.b)
            throw std::invalid_argument("UncertaintySpec: uniform deviation must be symmetric");
        if (setpoint_dev.kind == ParamDist::Kind::normal && setpoint_dev.a != 0.0)
            throw std::invalid_argument("UncertaintySpec: setpoint deviation must be zero-mean");
        if (setpoint_dev.kind == ParamDist::Kind::uniform && setpoint_dev.a != -setpoint_dev.b)
            throw std::invalid_argument("UncertaintySpec: uniform deviation must be symmetric");
    }

    [[nodiscard]] double ambient_sd() const { return dist_sd(ambient_dev); }
    [[nodiscard]] double setpoint_sd() const { return dist_sd(setpoint_dev); }

    static double dist_sd(const ParamDist& d) {
        switch (d.kind) {
            case ParamDist::Kind::constant: return 0.0;
            case ParamDist::Kind::normal: return d.b;
            case ParamDist::Kind::uniform: return (d.b - d.a) / (2.0 * std::sqrt(3.0));
        }
        return 0.0;
    }
};

/// Cumulants kappa_1..kappa_n of one deviation input. Normal: kappa_2 = sd^2.
/// Uniform(-a, a): kappa_2 = a^2/3, kappa_4 = -2a^4/15, kappa_6 = 16a^6/63.
inline std::array<double, 8> input_cumulants(const ParamDist& d) {
    std::array<double, 8> k{};
    switch (d.kind) {
        case ParamDist::Kind::constant: break;
        case ParamDist::Kind::normal: k[1] = d.b * d.b; break;
        case ParamDist::Kind::uniform: {
            double a = 0.5 * (d.b - d.a);  // half width
            k[1] = a * a / 3.0;
            k[3] = -2.0 * std::pow(a, 4) / 15.0;
            k[5] = 16.0 * std::pow(a, 6) / 63.0;
            break;
        }
    }
    return k;  // k[v-1] = kappa_v
}

/// Cumulants of the aggregate power deviation at one time instant, MW^v.
struct CumulantSet {
    int order = 2;
    std::array<double, 8> k{};  ///< k[v-1] = kappa_v

    [[nodiscard]] double variance() const { return k[1]; }
    [[nodiscard]] double sd() const { return k[1] > 0.0 ? std::sqrt(k[1]) : 0.0; }
};

/// Nominal and perturbed timelines of one cluster; the perturbations feed the
/// central differences for duty sensitivities and breakpoint endpoints.
struct ClusterStochastics {
    static constexpr double kStep = 0.01;  ///< degC finite-difference step

    MigrationTimeline nominal;
    MigrationTimeline amb_hi, amb_lo;  ///< ambient +- kStep
    MigrationTimeline set_hi, set_lo;  ///< setpoint +- kStep
    double power_sum_mw = 0.0;

    static ClusterStochastics build(const Device& rep, double power_sum_kw, double beta,
                                    double ambient, double t_s,
                                    HeatRateMode mode = HeatRateMode::cop_times_p) {
        ClusterStochastics cs;
        cs.power_sum_mw = power_sum_kw / 1000.0;
        cs.nominal = build_timeline(rep.params, rep.band, beta, ambient, t_s, mode);
        cs.amb_hi = build_timeline(rep.params, rep.band, beta, ambient + kStep, t_s, mode);
        cs.amb_lo = build_timeline(rep.params, rep.band, beta, ambient - kStep, t_s, mode);
        cs.set_hi = build_timeline(rep.params, rep.band.shifted(kStep), beta, ambient, t_s, mode);
        cs.set_lo = build_timeline(rep.params, rep.band.shifted(-kStep), beta, ambient, t_s, mode);
        return cs;
    }
};

/// Gaussian distributions of one piece's endpoints (means are the nominal
/// bounds, variances from first-order propagation of the two deviations).
struct EndpointDistribution {
    double lower_mean = 0.0, lower_sd = 0.0;
    double upper_mean = 0.0, upper_sd = 0.0;
    bool lower_infinite = false, upper_infinite = false;
};

namespace detail {

inline const IntervalPiece* find_kind(const MigrationTimeline& tl, PieceKind k) {
    return tl.piece_of_kind(k);
}

/// Central (or one-sided fallback) difference of a piece bound across two
/// perturbed timelines.
inline double bound_sensitivity(const MigrationTimeline& hi, const MigrationTimeline& lo,
                                PieceKind kind, bool upper, double nominal_value, double h) {
    const IntervalPiece* ph = find_kind(hi, kind);
    const IntervalPiece* pl = find_kind(lo, kind);
    auto bound = [upper](const IntervalPiece* p) { return upper ? p->upper : p->lower; };
    if (ph && pl) return (bound(ph) - bound(pl)) / (2.0 * h);
    if (ph) return (bound(ph) - nominal_value) / h;
    if (pl) return (nominal_value - bound(pl)) / h;
    return 0.0;
}

}  // namespace detail

/// Endpoint distributions for every piece of a cluster timeline.
inline std::vector<EndpointDistribution> endpoint_distributions(const ClusterStochastics& cs,
                                                                double sigma_ambient,
                                                                double sigma_setpoint) {
    const double h = ClusterStochastics::kStep;
    std::vector<EndpointDistribution> out;
    out.reserve(cs.nominal.pieces.size());
    for (const auto& p : cs.nominal.pieces) {
        EndpointDistribution e;
        e.lower_infinite = !std::isfinite(p.lower);
        e.upper_infinite = !std::isfinite(p.upper);
        e.lower_mean = p.lower;
        e.upper_mean = p.upper;
        if (!e.lower_infinite && p.lower > 0.0) {  // the deployment instant itself is exact
            double da = detail::bound_sensitivity(cs.amb_hi, cs.amb_lo, p.kind, false, p.lower, h);
            double ds = detail::bound_sensitivity(cs.set_hi, cs.set_lo, p.kind, false, p.lower, h);
            e.lower_sd = std::hypot(da * sigma_ambient, ds * sigma_setpoint);
        }
        if (!e.upper_infinite && p.upper > 0.0) {
            double da = detail::bound_sensitivity(cs.amb_hi, cs.amb_lo, p.kind, true, p.upper, h);
            double ds = detail::bound_sensitivity(cs.set_hi, cs.set_lo, p.kind, true, p.upper, h);
            e.upper_sd = std::hypot(da * sigma_ambient, ds * sigma_setpoint);
        }
        out.push_back(e);
    }
    return out;
}

/// Probability that time t belongs to each piece:
/// rho = (1 - F_upper(t)) * F_lower(t), renormalized to sum to one.
/// t is absolute (hours); endpoints live relative to t_s.
inline std::vector<double> interval_probabilities(const MigrationTimeline& tl,
                                                  const std::vector<EndpointDistribution>& ends,
                                                  double t) {
    if (ends.size() != tl.pieces.size())
        throw std::invalid_argument("interval_probabilities: one endpoint distribution per piece");
    double dt = t - tl.t_s;
    std::vector<double> rho(ends.size(), 0.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < ends.size(); ++i) {
        const auto& e = ends[i];
        double fl = e.lower_infinite
                        ? 1.0
                        : (e.lower_sd > 1e-12 ? normal_cdf((dt - e.lower_mean) / e.lower_sd)
                                              : (dt >= e.lower_mean ? 1.0 : 0.0));
        double fh = e.upper_infinite
                        ? 0.0
                        : (e.upper_sd > 1e-12 ? normal_cdf((dt - e.upper_mean) / e.upper_sd)
                                              : (dt >= e.upper_mean ? 1.0 : 0.0));
        rho[i] = (1.0 - fh) * fl;
        sum += rho[i];
    }
    if (sum <= 0.0) {  // numerically far from every piece; fall back to the nominal one
        for (std::size_t i = 0; i < tl.pieces.size(); ++i)
            rho[i] = (dt >= tl.pieces[i].lower && dt < tl.pieces[i].upper) ? 1.0 : 0.0;
        return rho;
    }
    for (auto& r : rho) r /= sum;
    return rho;
}

/// Central-difference sensitivities of one piece's duty w.r.t. ambient and
/// setpoint, evaluated at the forecast means. Falls back to one-sided
/// differences when a perturbed timeline lacks the piece kind.
inline std::pair<double, double> duty_sensitivities(const ClusterStochastics& cs, PieceKind kind,
                                                    double t, double h = ClusterStochastics::kStep) {
    if (!(h > 0.0)) throw std::invalid_argument("duty_sensitivities: h must be > 0");
    double dt = t - cs.nominal.t_s;
    auto eta = [&](const MigrationTimeline& tl) -> double {
        const IntervalPiece* p = detail::find_kind(tl, kind);
        if (!p) return std::numeric_limits<double>::quiet_NaN();
        CycleTimes ct = p->evaluate(dt);
        return cluster_duty(ct.t_on, ct.t_off);
    };
    double e0 = eta(cs.nominal);
    auto central = [&](const MigrationTimeline& hi, const MigrationTimeline& lo) -> double {
        double a = eta(hi), b = eta(lo);
        if (!std::isnan(a) && !std::isnan(b)) return (a - b) / (2.0 * h);
        if (!std::isnan(a) && !std::isnan(e0)) return (a - e0) / h;
        if (!std::isnan(b) && !std::isnan(e0)) return (e0 - b) / h;
        return 0.0;
    };
    return {central(cs.amb_hi, cs.amb_lo), central(cs.set_hi, cs.set_lo)};
}

/// Probability-weighted mean aggregate power at forecast-mean inputs, MW.
inline double mean_aggregate_power(const std::vector<ClusterStochastics>& clusters,
                                   const std::vector<std::vector<EndpointDistribution>>& ends,
                                   double t) {
    double mw = 0.0;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        auto rho = interval_probabilities(clusters[c].nominal, ends[c], t);
        double duty = 0.0;
        double dt = t - clusters[c].nominal.t_s;
        for (std::size_t i = 0; i < rho.size(); ++i) {
            if (rho[i] <= 0.0) continue;
            CycleTimes ct = clusters[c].nominal.pieces[i].evaluate(dt);
            duty += cluster_duty(ct.t_on, ct.t_off) * rho[i];
        }
        mw += duty * clusters[c].power_sum_mw;
    }
    return mw;
}

/// Linearized sensitivity weights of the power deviation at time t:
/// dP = A * d(theta_a) + B * d(theta_set), both in MW/degC.
inline std::pair<double, double> deviation_weights(
    const std::vector<ClusterStochastics>& clusters,
    const std::vector<std::vector<EndpointDistribution>>& ends, double t) {
    double a_sum = 0.0, b_sum = 0.0;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        auto rho = interval_probabilities(clusters[c].nominal, ends[c], t);
        for (std::size_t i = 0; i < rho.size(); ++i) {
            if (rho[i] <= 0.0) continue;
            auto [da, ds] = duty_sensitivities(clusters[c], clusters[c].nominal.pieces[i].kind, t);
            a_sum += da * rho[i] * clusters[c].power_sum_mw;
            b_sum += ds * rho[i] * clusters[c].power_sum_mw;
        }
    }
    return {a_sum, b_sum};
}

/// Cumulants of the power deviation: kappa_v = A^v kappa_v(amb) + B^v kappa_v(set).
inline CumulantSet deviation_cumulants(const std::vector<ClusterStochastics>& clusters,
                                       const std::vector<std::vector<EndpointDistribution>>& ends,
                                       const UncertaintySpec& unc, double t) {
    auto [a, b] = deviation_weights(clusters, ends, t);
    auto ka = input_cumulants(unc.ambient_dev);
    auto kb = input_cumulants(unc.setpoint_dev);
    CumulantSet out;
    out.order = unc.cumulant_order;
    for (int v = 1; v <= out.order; ++v)
        out.k[v - 1] = std::pow(a, v) * ka[v - 1] + std::pow(b, v) * kb[v - 1];
    return out;
}

/// Gram-Charlier Type A density of the power deviation. The standardized
/// series phi(w) * [1 + sum c_i/i! He_i(w)] is clipped at zero and
/// renormalized over +-12 standard deviations.
class GramCharlierPdf {
public:
    explicit GramCharlierPdf(const CumulantSet& cum) : sd_(cum.sd()) {
        if (!(cum.k[1] > 0.0)) {
            degenerate_ = true;
            sd_ = 0.0;
            return;
        }
        double s = sd_;
        std::array<double, 9> lam{};  // lam[r] = kappa_r / sd^r
        for (int r = 3; r <= cum.order; ++r) lam[r] = cum.k[r - 1] / std::pow(s, r);
        coef_[3] = lam[3];
        coef_[4] = lam[4];
        coef_[5] = lam[5];
        coef_[6] = lam[6] + 10.0 * lam[3] * lam[3];
        coef_[7] = lam[7] + 35.0 * lam[3] * lam[4];
        coef_[8] = lam[8] + 56.0 * lam[3] * lam[5] + 35.0 * lam[4] * lam[4];
        for (int r = cum.order + 1; r <= 8; ++r) coef_[r] = 0.0;
        // trapezoid normalization of the clipped series
        const int n = 4800;
        const double w0 = -12.0, w1 = 12.0, dw = (w1 - w0) / n;
        double z = 0.0;
        for (int i = 0; i <= n; ++i) {
            double f = raw_series(w0 + i * dw);
            z += (i == 0 || i == n) ? 0.5 * f : f;
        }
        norm_ = z * dw;
        if (!(norm_ > 0.0)) norm_ = 1.0;
    }

    [[nodiscard]] bool degenerate() const { return degenerate_; }
    [[nodiscard]] double sd() const { return sd_; }

    /// Density at deviation x (MW).
    double operator()(double x) const {
        if (degenerate_) return 0.0;
        return raw_series(x / sd_) / (sd_ * norm_);
    }

private:
    [[nodiscard]] double raw_series(double w) const {
        double w2 = w * w;
        double he3 = w * (w2 - 3.0);
        double he4 = w2 * (w2 - 6.0) + 3.0;
        double he5 = w * (w2 * (w2 - 10.0) + 15.0);
        double he6 = w2 * (w2 * (w2 - 15.0) + 45.0) - 15.0;
        double he7 = w * (w2 * (w2 * (w2 - 21.0) + 105.0) - 105.0);
        double he8 = w2 * (w2 * (w2 * (w2 - 28.0) + 210.0) - 420.0) + 105.0;
        double series = 1.0 + coef_[3] / 6.0 * he3 + coef_[4] / 24.0 * he4 +
                        coef_[5] / 120.0 * he5 + coef_[6] / 720.0 * he6 +
                        coef_[7] / 5040.0 * he7 + coef_[8] / 40320.0 * he8;
        return std::max(0.0, series * normal_pdf(w));
    }

    bool degenerate_ = false;
    double sd_ = 0.0;
    double norm_ = 1.0;
    std::array<double, 9> coef_{};
};

inline GramCharlierPdf gram_charlier_pdf(const CumulantSet& cum) { return GramCharlierPdf(cum); }

namespace detail {
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double whole, double tol,
                               int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    if (b <= a) return 0.0;
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 24);
}
}  // namespace detail

/// CDF of the aggregate power at one instant: integral of the deviation
/// density shifted to the mean, clamped to [0, 1].
inline double aggregate_cdf(double mean_mw, const GramCharlierPdf& pdf, double x) {
    if (pdf.degenerate()) return x >= mean_mw ? 1.0 : 0.0;
    double lo = mean_mw - 12.0 * pdf.sd();
    if (x <= lo) return 0.0;
    double hi = std::min(x, mean_mw + 12.0 * pdf.sd());
    double v = detail::integrate([&](double u) { return pdf(u - mean_mw); }, lo, hi, 1e-9);
    return std::min(1.0, std::max(0.0, v));
}

/// Mean, cumulants and distribution functions of the aggregate power at one
/// time instant.
struct PowerDistribution {
    double mean_mw = 0.0;
    CumulantSet cumulants;
    GramCharlierPdf pdf;

    PowerDistribution(double mean, const CumulantSet& c) : mean_mw(mean), cumulants(c), pdf(c) {}

    [[nodiscard]] double density(double power_mw) const { return pdf(power_mw - mean_mw); }
    [[nodiscard]] double cdf(double power_mw) const { return aggregate_cdf(mean_mw, pdf, power_mw); }
};

/// Bundles the per-cluster stochastic machinery for a scenario.
class StochasticModel {
public:
    StochasticModel(const std::vector<Cluster>& clusters, double beta, double t_s,
                    const UncertaintySpec& unc, HeatRateMode mode = HeatRateMode::cop_times_p)
        : unc_(unc) {
        unc_.validate();
        double sa = unc_.ambient_sd(), ss = unc_.setpoint_sd();
        for (const auto& c : clusters) {
            clusters_.push_back(ClusterStochastics::build(c.representative, c.member_power_sum,
                                                          beta, unc_.ambient_mean, t_s, mode));
            ends_.push_back(endpoint_distributions(clusters_.back(), sa, ss));
        }
    }

    [[nodiscard]] const std::vector<ClusterStochastics>& clusters() const { return clusters_; }
    [[nodiscard]] const std::vector<std::vector<EndpointDistribution>>& endpoints() const {
        return ends_;
    }

    [[nodiscard]] double mean_power(double t) const {
        return mean_aggregate_power(clusters_, ends_, t);
    }

    [[nodiscard]] CumulantSet cumulants(double t) const {
        return deviation_cumulants(clusters_, ends_, unc_, t);
    }

    [[nodiscard]] PowerDistribution distribution(double t) const {
        return PowerDistribution(mean_power(t), cumulants(t));
    }

    [[nodiscard]] const UncertaintySpec& uncertainty() const { return unc_; }

private:
    UncertaintySpec unc_;
    std::vector<ClusterStochastics> clusters_;
    std::vector<std::vector<EndpointDistribution>> ends_;
};

}  // namespace resdyn
