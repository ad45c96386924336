#pragma once

// Transmission network model, DC susceptance matrix, the minimum-curtailment
// DC-OPF operator and system-state enumeration over per-bus capacity
// polynomials.

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "resdyn/common.hpp"
#include "resdyn/multistate.hpp"
#include "resdyn/simplex.hpp"

namespace resdyn {

struct Bus {
    int id = 0;
    double load_mw = 0.0;  ///< normal-state load
};

struct Line {
    int from = 0, to = 0;
    double x_pu = 0.0;      ///< series reactance, p.u. on the system base
    double limit_mw = 0.0;  ///< thermal limit; <= 0 means unlimited
};

/// Availability mask over lines with its probability.
struct NetworkState {
    std::vector<bool> line_available;
    double probability = 1.0;
};

struct Network {
    std::vector<Bus> buses;
    std::vector<Line> lines;
    int reference_bus = 0;
    std::vector<NetworkState> states;  ///< default: single all-available state

    [[nodiscard]] std::size_t bus_index(int id) const {
        for (std::size_t i = 0; i < buses.size(); ++i)
            if (buses[i].id == id) return i;
        throw std::invalid_argument("Network: unknown bus id " + std::to_string(id));
    }

    [[nodiscard]] const NetworkState& state(std::size_t j) const {
        static const NetworkState all{{}, 1.0};
        if (states.empty()) {
            if (j != 0) throw std::out_of_range("Network: no such network state");
            return all;
        }
        return states.at(j);
    }

    [[nodiscard]] std::size_t n_states() const { return states.empty() ? 1 : states.size(); }

    [[nodiscard]] bool line_available(std::size_t state_idx, std::size_t line_idx) const {
        const NetworkState& s = state(state_idx);
        return s.line_available.empty() ? true : s.line_available.at(line_idx);
    }

    void validate() const {
        for (const auto& l : lines) {
            if (!(l.x_pu > 0.0)) throw std::invalid_argument("Network: line reactance must be > 0");
            bus_index(l.from);
            bus_index(l.to);
        }
        bus_index(reference_bus);
        for (std::size_t j = 0; j < n_states(); ++j) check_connected(j);
    }

    /// Throws naming the isolated buses if the network state is disconnected.
    void check_connected(std::size_t state_idx) const {
        if (buses.empty()) return;
        std::vector<char> seen(buses.size(), 0);
        std::queue<std::size_t> q;
        q.push(bus_index(reference_bus));
        seen[q.front()] = 1;
        while (!q.empty()) {
            std::size_t b = q.front();
            q.pop();
            for (std::size_t l = 0; l < lines.size(); ++l) {
                if (!line_available(state_idx, l)) continue;
                std::size_t u = bus_index(lines[l].from), v = bus_index(lines[l].to);
                std::size_t other = u == b ? v : (v == b ? u : b);
                if (other != b && !seen[other]) {
                    seen[other] = 1;
                    q.push(other);
                }
            }
        }
        std::string isolated;
        for (std::size_t i = 0; i < buses.size(); ++i)
            if (!seen[i]) isolated += (isolated.empty() ? "" : ", ") + std::to_string(buses[i].id);
        if (!isolated.empty())
            throw std::runtime_error("Network: state " + std::to_string(state_idx) +
                                     " disconnects buses {" + isolated + "} from the reference");
    }
};

/// Full (pre-reference-reduction) DC susceptance matrix B with
/// B[i][k] = -1/x_ik and row sums zero.
inline std::vector<std::vector<double>> build_susceptance(const Network& net,
                                                          std::size_t state_idx = 0) {
    net.check_connected(state_idx);
    const std::size_t n = net.buses.size();
    std::vector<std::vector<double>> b(n, std::vector<double>(n, 0.0));
    for (std::size_t l = 0; l < net.lines.size(); ++l) {
        if (!net.line_available(state_idx, l)) continue;
        std::size_t i = net.bus_index(net.lines[l].from);
        std::size_t k = net.bus_index(net.lines[l].to);
        double y = 1.0 / net.lines[l].x_pu;
        b[i][i] += y;
        b[k][k] += y;
        b[i][k] -= y;
        b[k][i] -= y;
    }
    return b;
}

/// One enumerated system state: per-bus equivalent available generation plus
/// the curtailment the OPF assigns to it.
struct SystemState {
    std::vector<double> avail_gen_mw;  ///< per bus
    std::size_t network_state = 0;
    double probability = 0.0;
    std::vector<double> curtailment_mw;  ///< per bus, filled by the OPF
    double total_curtailment_mw = 0.0;
};

struct OpfResult {
    std::vector<double> curtailment_mw;  ///< per bus
    std::vector<double> served_mw;       ///< per bus
    std::vector<double> generation_mw;   ///< per bus
    std::vector<double> flow_mw;         ///< per line (0 for unavailable)
    std::vector<double> angle_rad;       ///< per bus
    double total_curtailment_mw = 0.0;
};

/// Minimum-total-curtailment DC-OPF. Bus weights 1 + i*1e-6 make the per-bus
/// allocation unique and reproducible.
inline OpfResult min_total_curtailment(const Network& net, const std::vector<double>& avail_gen_mw,
                                       const std::vector<double>& loads_mw,
                                       std::size_t state_idx = 0) {
    const std::size_t n = net.buses.size();
    if (avail_gen_mw.size() != n || loads_mw.size() != n)
        throw std::invalid_argument("min_total_curtailment: per-bus vectors must match bus count");
    for (double g : avail_gen_mw)
        if (g < 0.0) throw std::invalid_argument("min_total_curtailment: negative capacity");
    for (double d : loads_mw)
        if (d < 0.0) throw std::invalid_argument("min_total_curtailment: negative load");

    auto b = build_susceptance(net, state_idx);
    const std::size_t ref = net.bus_index(net.reference_bus);
    const double inf = std::numeric_limits<double>::infinity();

    // variable layout: theta (non-ref buses, free), p (buses with capacity),
    // D (buses with load)
    std::vector<std::size_t> theta_var(n, SIZE_MAX), p_var(n, SIZE_MAX), d_var(n, SIZE_MAX);
    LpProblem lp;
    for (std::size_t i = 0; i < n; ++i)
        if (i != ref) {
            theta_var[i] = lp.n++;
            lp.lb.push_back(-inf);
            lp.ub.push_back(inf);
            lp.c.push_back(0.0);
        }
    for (std::size_t i = 0; i < n; ++i)
        if (avail_gen_mw[i] > 0.0) {
            p_var[i] = lp.n++;
            lp.lb.push_back(0.0);
            lp.ub.push_back(avail_gen_mw[i]);
            lp.c.push_back(0.0);
        }
    for (std::size_t i = 0; i < n; ++i)
        if (loads_mw[i] > 0.0) {
            d_var[i] = lp.n++;
            lp.lb.push_back(0.0);
            lp.ub.push_back(loads_mw[i]);
            // maximizing weighted served load == minimizing weighted curtailment
            lp.c.push_back(-(1.0 + static_cast<double>(i) * 1e-6));
        }

    // bus balance: sum_k B[i][k] theta_k - p_i + D_i = 0
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(lp.n, 0.0);
        for (std::size_t k = 0; k < n; ++k)
            if (theta_var[k] != SIZE_MAX && b[i][k] != 0.0) row[theta_var[k]] = b[i][k];
        if (p_var[i] != SIZE_MAX) row[p_var[i]] = -1.0;
        if (d_var[i] != SIZE_MAX) row[d_var[i]] = 1.0;
        lp.a_eq.push_back(std::move(row));
        lp.b_eq.push_back(0.0);
    }
    // line limits: |(theta_i - theta_k)/x| <= limit
    for (std::size_t l = 0; l < net.lines.size(); ++l) {
        if (!net.line_available(state_idx, l) || net.lines[l].limit_mw <= 0.0) continue;
        std::size_t i = net.bus_index(net.lines[l].from);
        std::size_t k = net.bus_index(net.lines[l].to);
        double y = 1.0 / net.lines[l].x_pu;
        for (double sign : {1.0, -1.0}) {
            std::vector<double> row(lp.n, 0.0);
            if (theta_var[i] != SIZE_MAX) row[theta_var[i]] = sign * y;
            if (theta_var[k] != SIZE_MAX) row[theta_var[k]] = -sign * y;
            lp.a_ub.push_back(std::move(row));
            lp.b_ub.push_back(net.lines[l].limit_mw);
        }
    }

    LpSolution sol = solve_lp(lp);
    if (sol.status != LpSolution::Status::optimal) {
        const char* what = sol.status == LpSolution::Status::infeasible ? "infeasible"
                           : sol.status == LpSolution::Status::unbounded ? "unbounded"
                                                                         : "iteration limit";
        throw std::runtime_error(std::string("min_total_curtailment: LP ") + what +
                                 " in network state " + std::to_string(state_idx));
    }

    OpfResult res;
    res.curtailment_mw.assign(n, 0.0);
    res.served_mw.assign(n, 0.0);
    res.generation_mw.assign(n, 0.0);
    res.angle_rad.assign(n, 0.0);
    res.flow_mw.assign(net.lines.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double served = d_var[i] != SIZE_MAX ? sol.x[d_var[i]] : 0.0;
        served = std::min(served, loads_mw[i]);
        res.served_mw[i] = served;
        res.curtailment_mw[i] = std::max(0.0, loads_mw[i] - served);
        res.generation_mw[i] = p_var[i] != SIZE_MAX ? sol.x[p_var[i]] : 0.0;
        res.angle_rad[i] = theta_var[i] != SIZE_MAX ? sol.x[theta_var[i]] : 0.0;
        res.total_curtailment_mw += res.curtailment_mw[i];
    }
    for (std::size_t l = 0; l < net.lines.size(); ++l) {
        if (!net.line_available(state_idx, l)) continue;
        std::size_t i = net.bus_index(net.lines[l].from);
        std::size_t k = net.bus_index(net.lines[l].to);
        res.flow_mw[l] = (res.angle_rad[i] - res.angle_rad[k]) / net.lines[l].x_pu;
    }
    return res;
}

/// Cartesian product of per-bus capacity states and network states at time
/// index k. States below prob_floor are pruned and the mass renormalized.
inline std::vector<SystemState> enumerate_system_states(
    const std::vector<LzPolynomial>& bus_polynomials, const Network& net, std::size_t k,
    double prob_floor = 0.0, std::size_t max_enumerated = 2000000) {
    const std::size_t n = net.buses.size();
    if (bus_polynomials.size() != n)
        throw std::invalid_argument("enumerate_system_states: one polynomial per bus");
    double raw_count = static_cast<double>(net.n_states());
    for (const auto& p : bus_polynomials) raw_count *= static_cast<double>(p.n_states());
    if (raw_count > static_cast<double>(max_enumerated))
        throw std::runtime_error(
            "enumerate_system_states: state space too large (" + std::to_string(raw_count) +
            "); reduce per-bus polynomials with lz_reduce or raise the cap");

    std::vector<SystemState> out;
    std::vector<std::size_t> idx(n, 0);
    for (std::size_t js = 0; js < net.n_states(); ++js) {
        double pnet = net.state(js).probability;
        if (pnet <= 0.0) continue;
        std::fill(idx.begin(), idx.end(), 0);
        while (true) {
            double prob = pnet;
            for (std::size_t bidx = 0; bidx < n && prob > 0.0; ++bidx)
                prob *= bus_polynomials[bidx].prob(idx[bidx], k);
            if (prob >= prob_floor && prob > 0.0) {
                SystemState s;
                s.network_state = js;
                s.probability = prob;
                s.avail_gen_mw.resize(n);
                for (std::size_t bidx = 0; bidx < n; ++bidx)
                    s.avail_gen_mw[bidx] = bus_polynomials[bidx].capacities[idx[bidx]];
                out.push_back(std::move(s));
            }
            std::size_t d = 0;
            while (d < n && ++idx[d] == bus_polynomials[d].n_states()) idx[d++] = 0;
            if (d == n) break;
        }
    }
    double mass = 0.0;
    for (const auto& s : out) mass += s.probability;
    if (mass > 0.0)
        for (auto& s : out) s.probability /= mass;
    return out;
}

}  // namespace resdyn
