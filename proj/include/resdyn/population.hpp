#pragma once

// Fleet synthesis from parameter distributions and k-means clustering of
// devices by their steady-state cycle times.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "resdyn/common.hpp"
#include "resdyn/thermal.hpp"

namespace resdyn {

/// Scalar parameter distribution: constant(a), uniform(a,b) or normal(mean=a, sd=b).
struct ParamDist {
    enum class Kind { constant, uniform, normal };
    Kind kind = Kind::constant;
    double a = 0.0;
    double b = 0.0;

    static ParamDist constant(double v) { return {Kind::constant, v, 0.0}; }
    static ParamDist uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
    static ParamDist normal(double mean, double sd) { return {Kind::normal, mean, sd}; }

    void validate() const {
        if (kind == Kind::uniform && !(a <= b))
            throw std::invalid_argument("ParamDist: uniform needs a <= b");
        if (kind == Kind::normal && !(b >= 0.0))
            throw std::invalid_argument("ParamDist: normal needs sd >= 0");
    }

    template <class Rng>
    double sample(Rng& rng) const {
        switch (kind) {
            case Kind::constant: return a;
            case Kind::uniform: return std::uniform_real_distribution<double>(a, b)(rng);
            case Kind::normal: return std::normal_distribution<double>(a, b)(rng);
        }
        return a;
    }
};

struct PopulationSpec {
    std::size_t count = 0;
    ParamDist C_dist;
    ParamDist R_dist;
    ParamDist p_dist;
    ParamDist setpoint_dist;
    double cop = 1.0;
    double deadband = 1.0;  ///< degC
    std::uint64_t seed = 0;
    HeatRateMode heat_rate_mode = HeatRateMode::cop_times_p;

    void validate() const {
        C_dist.validate();
        R_dist.validate();
        p_dist.validate();
        setpoint_dist.validate();
        if (!(cop > 0.0)) throw std::invalid_argument("PopulationSpec: cop must be > 0");
        if (!(deadband > 0.0)) throw std::invalid_argument("PopulationSpec: deadband must be > 0");
    }
};

struct Device {
    DeviceParams params;
    HysteresisBand band;
};

/// One k-means cluster of devices; the representative is an actual member.
struct Cluster {
    Device representative;
    std::size_t representative_index = 0;  ///< index into the device sequence
    double member_power_sum = 0.0;         ///< kW
    std::size_t member_count = 0;
    std::vector<std::uint32_t> members;    ///< device indices
    CycleTimes base_times;                 ///< representative steady cycle times, hours
};

/// Draw `spec.count` devices. Devices that cannot cycle at the nominal ambient
/// are resampled (up to 100 tries each before giving up with an error).
inline std::vector<Device> sample_population(const PopulationSpec& spec, double ambient_nominal) {
    spec.validate();
    std::mt19937_64 rng(derive_seed(spec.seed, 0x706f70756cULL));
    std::vector<Device> out;
    out.reserve(spec.count);
    for (std::size_t i = 0; i < spec.count; ++i) {
        bool ok = false;
        for (int tries = 0; tries < 100; ++tries) {
            Device d;
            d.params = DeviceParams{spec.C_dist.sample(rng), spec.R_dist.sample(rng),
                                    spec.p_dist.sample(rng), spec.cop};
            d.band = HysteresisBand{spec.setpoint_dist.sample(rng), spec.deadband};
            if (d.params.C > 0 && d.params.R > 0 && d.params.p > 0 &&
                device_feasible(d.params, d.band, ambient_nominal, spec.heat_rate_mode)) {
                out.push_back(d);
                ok = true;
                break;
            }
        }
        if (!ok)
            throw std::runtime_error("sample_population: device infeasible after 100 resampling tries");
    }
    return out;
}

namespace detail {

struct KMeansResult {
    std::vector<std::uint32_t> labels;
    std::vector<std::array<double, 2>> centers;
    double ssw = 0.0;  // within-cluster sum of squares
};

inline double sqdist(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    double dx = a[0] - b[0], dy = a[1] - b[1];
    return dx * dx + dy * dy;
}

/// Plain 2-D k-means with k-means++ init; <=300 iterations, centroid movement
/// tolerance 1e-6.
inline KMeansResult kmeans2d(const std::vector<std::array<double, 2>>& pts, std::size_t k,
                             std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = pts.size();
    KMeansResult res;
    res.centers.reserve(k);

    // k-means++ seeding
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    res.centers.push_back(pts[pick(rng)]);
    std::vector<double> d2(n, std::numeric_limits<double>::max());
    while (res.centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], sqdist(pts[i], res.centers.back()));
            total += d2[i];
        }
        double r = std::uniform_real_distribution<double>(0.0, total)(rng);
        std::size_t chosen = n - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += d2[i];
            if (acc >= r) { chosen = i; break; }
        }
        res.centers.push_back(pts[chosen]);
    }

    res.labels.assign(n, 0);
    std::vector<std::array<double, 2>> sums(k);
    std::vector<std::size_t> cnt(k);
    for (int iter = 0; iter < 300; ++iter) {
        for (auto& s : sums) s = {0.0, 0.0};
        std::fill(cnt.begin(), cnt.end(), std::size_t{0});
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            std::uint32_t bj = 0;
            for (std::uint32_t j = 0; j < k; ++j) {
                double d = sqdist(pts[i], res.centers[j]);
                if (d < best) { best = d; bj = j; }
            }
            res.labels[i] = bj;
            sums[bj][0] += pts[i][0];
            sums[bj][1] += pts[i][1];
            ++cnt[bj];
        }
        double moved = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (cnt[j] == 0) continue;  // empty cluster keeps its center
            std::array<double, 2> nc{sums[j][0] / cnt[j], sums[j][1] / cnt[j]};
            moved = std::max(moved, std::sqrt(sqdist(nc, res.centers[j])));
            res.centers[j] = nc;
        }
        if (moved < 1e-6) break;
    }
    res.ssw = 0.0;
    for (std::size_t i = 0; i < n; ++i) res.ssw += sqdist(pts[i], res.centers[res.labels[i]]);
    return res;
}

inline std::vector<std::array<double, 2>> cycle_features_minutes(
    const std::vector<Device>& devices, double ambient, HeatRateMode mode) {
    std::vector<std::array<double, 2>> pts(devices.size());
    for (std::size_t i = 0; i < devices.size(); ++i) {
        CycleTimes ct = steady_cycle_times(devices[i].params, devices[i].band, ambient, mode);
        pts[i] = {ct.t_on * 60.0, ct.t_off * 60.0};
    }
    return pts;
}

}  // namespace detail

/// Partition the fleet into q clusters by (T_on0, T_off0) in minutes. Clusters
/// come back sorted by the representative's T_on0 so the output ordering does
/// not depend on init order.
inline std::vector<Cluster> cluster_by_cycle_times(const std::vector<Device>& devices,
                                                   double ambient, std::size_t q,
                                                   std::uint64_t seed,
                                                   HeatRateMode mode = HeatRateMode::cop_times_p) {
    if (q < 1) throw std::invalid_argument("cluster_by_cycle_times: q must be >= 1");
    if (q > devices.size())
        throw std::invalid_argument("cluster_by_cycle_times: q exceeds device count");

    auto pts = detail::cycle_features_minutes(devices, ambient, mode);
    detail::KMeansResult km = detail::kmeans2d(pts, q, derive_seed(seed, 0x6b6d65616e73ULL));

    std::vector<Cluster> clusters(q);
    std::vector<double> best_d2(q, std::numeric_limits<double>::max());
    for (std::size_t i = 0; i < devices.size(); ++i) {
        std::uint32_t c = km.labels[i];
        Cluster& cl = clusters[c];
        cl.member_power_sum += devices[i].params.p;
        cl.member_count += 1;
        cl.members.push_back(static_cast<std::uint32_t>(i));
        double d = detail::sqdist(pts[i], km.centers[c]);
        if (d < best_d2[c]) {
            best_d2[c] = d;
            cl.representative_index = i;
        }
    }
    clusters.erase(std::remove_if(clusters.begin(), clusters.end(),
                                  [](const Cluster& c) { return c.member_count == 0; }),
                   clusters.end());
    for (auto& cl : clusters) {
        cl.representative = devices[cl.representative_index];
        cl.base_times = steady_cycle_times(cl.representative.params, cl.representative.band,
                                           ambient, mode);
    }
    std::sort(clusters.begin(), clusters.end(), [](const Cluster& a, const Cluster& b) {
        return a.base_times.t_on < b.base_times.t_on;
    });
    return clusters;
}

/// Calinski-Harabasz variance-ratio score of a k-means solution.
inline double calinski_harabasz(const std::vector<std::array<double, 2>>& pts,
                                const detail::KMeansResult& km) {
    const std::size_t n = pts.size();
    const std::size_t k = km.centers.size();
    if (k <= 1 || n <= k) return 0.0;
    std::array<double, 2> mean{0.0, 0.0};
    for (const auto& p : pts) { mean[0] += p[0]; mean[1] += p[1]; }
    mean[0] /= n;
    mean[1] /= n;
    std::vector<std::size_t> cnt(k, 0);
    for (auto l : km.labels) ++cnt[l];
    double ssb = 0.0;
    for (std::size_t j = 0; j < k; ++j) ssb += cnt[j] * detail::sqdist(km.centers[j], mean);
    if (km.ssw <= 0.0) return std::numeric_limits<double>::infinity();
    return (ssb / (k - 1)) / (km.ssw / (n - k));
}

/// Pick the cluster count in [2, q_max] that maximizes the Calinski-Harabasz
/// score (ties resolved toward the smaller count).
inline std::size_t choose_cluster_count(const std::vector<Device>& devices, double ambient,
                                        std::size_t q_max, std::uint64_t seed,
                                        HeatRateMode mode = HeatRateMode::cop_times_p) {
    if (q_max < 2) throw std::invalid_argument("choose_cluster_count: q_max must be >= 2");
    q_max = std::min(q_max, devices.size());
    auto pts = detail::cycle_features_minutes(devices, ambient, mode);
    double best = -1.0;
    std::size_t best_q = 2;
    for (std::size_t k = 2; k <= q_max; ++k) {
        auto km = detail::kmeans2d(pts, k, derive_seed(seed, 0x6b6d65616e73ULL + k));
        double ch = calinski_harabasz(pts, km);
        if (ch > best + 1e-12) {
            best = ch;
            best_q = k;
        }
    }
    return best_q;
}

}  // namespace resdyn
