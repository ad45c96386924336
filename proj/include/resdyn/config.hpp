#pragma once

// JSON scenario and network configuration. Times are minutes in config files
// and hours internally; powers are MW at system level and kW per device.

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "resdyn/oracle_mc.hpp"
#include "resdyn/reliability.hpp"

namespace resdyn {

using nlohmann::json;

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail_cfg {

inline const json& require(const json& j, const std::string& key, const std::string& ctx) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(ctx + ": missing field '" + key + "'");
    return *it;
}

inline ParamDist parse_dist(const json& j, const std::string& ctx) {
    if (j.is_number()) return ParamDist::constant(j.get<double>());
    if (!j.is_object() || j.size() != 1)
        throw ConfigError(ctx + ": expected a number or {uniform|normal|constant: ...}");
    if (j.contains("uniform")) {
        auto v = j["uniform"];
        if (!v.is_array() || v.size() != 2) throw ConfigError(ctx + ".uniform: expected [a, b]");
        return ParamDist::uniform(v[0].get<double>(), v[1].get<double>());
    }
    if (j.contains("normal")) {
        auto v = j["normal"];
        if (!v.is_array() || v.size() != 2)
            throw ConfigError(ctx + ".normal: expected [mean, sd]");
        return ParamDist::normal(v[0].get<double>(), v[1].get<double>());
    }
    if (j.contains("constant")) return ParamDist::constant(j["constant"].get<double>());
    throw ConfigError(ctx + ": unknown distribution kind");
}

inline json dist_to_json(const ParamDist& d) {
    switch (d.kind) {
        case ParamDist::Kind::constant: return json{{"constant", d.a}};
        case ParamDist::Kind::uniform: return json{{"uniform", {d.a, d.b}}};
        case ParamDist::Kind::normal: return json{{"normal", {d.a, d.b}}};
    }
    return {};
}

inline MultiStateUnit parse_unit(const json& j, bool reserve, const std::string& ctx) {
    MultiStateUnit u;
    u.bus = require(j, "bus", ctx).get<int>();
    std::string type = j.value("type", "markov");
    if (type == "markov") {
        u.kind = MultiStateUnit::Kind::markov_two_state;
        u.capacity_mw = require(j, "capacity_mw", ctx).get<double>();
        u.lambda_per_h = j.value("lambda_per_h", 0.0);
        u.mu_per_h = j.value("mu_per_h", 0.0);
        u.initial_up = j.value("initial_up", true);
    } else if (type == "states") {
        u.kind = MultiStateUnit::Kind::state_table;
        for (const auto& s : require(j, "states", ctx))
            u.states.push_back({require(s, "mw", ctx + ".states").get<double>(),
                                require(s, "prob", ctx + ".states").get<double>()});
    } else if (type == "wind") {
        // a speed table mapped through the turbine power curve
        u.kind = MultiStateUnit::Kind::state_table;
        double rated = require(j, "rated_mw", ctx).get<double>();
        double cut_in = j.value("cut_in_kmh", 4.0);
        double rated_v = j.value("rated_kmh", 15.0);
        double cut_out = j.value("cut_out_kmh", 25.0);
        std::map<double, double> mass;  // power -> prob
        for (const auto& s : require(j, "speed_states", ctx)) {
            double v = require(s, "kmh", ctx + ".speed_states").get<double>();
            double pr = require(s, "prob", ctx + ".speed_states").get<double>();
            mass[wind_power_from_speed(v, cut_in, rated_v, cut_out, rated)] += pr;
        }
        for (const auto& [mw, pr] : mass) u.states.push_back({mw, pr});
    } else {
        throw ConfigError(ctx + ": unknown unit type '" + type + "'");
    }
    if (reserve) {
        u.commit_h = j.value("commit_min", 0.0) / 60.0;
        u.lead_h = j.value("lead_min", 0.0) / 60.0;
    }
    double mass = 0.0;
    for (auto& [mw, pr] : u.states) mass += pr;
    if (u.kind == MultiStateUnit::Kind::state_table && std::abs(mass - 1.0) > 1e-6)
        throw ConfigError(ctx + ": state probabilities must sum to 1");
    return u;
}

inline json unit_to_json(const MultiStateUnit& u, bool reserve) {
    json j;
    j["bus"] = u.bus;
    if (u.kind == MultiStateUnit::Kind::markov_two_state) {
        j["type"] = "markov";
        j["capacity_mw"] = u.capacity_mw;
        j["lambda_per_h"] = u.lambda_per_h;
        j["mu_per_h"] = u.mu_per_h;
        j["initial_up"] = u.initial_up;
    } else {
        j["type"] = "states";
        json st = json::array();
        for (const auto& [mw, pr] : u.states) st.push_back(json{{"mw", mw}, {"prob", pr}});
        j["states"] = st;
    }
    if (reserve) {
        j["commit_min"] = u.commit_h * 60.0;
        j["lead_min"] = u.lead_h * 60.0;
    }
    return j;
}

}  // namespace detail_cfg

inline Network network_from_json(const json& j) {
    using detail_cfg::require;
    Network net;
    for (const auto& b : require(j, "buses", "network")) {
        Bus bus;
        bus.id = require(b, "id", "network.buses").get<int>();
        bus.load_mw = b.value("load_mw", 0.0);
        net.buses.push_back(bus);
    }
    for (const auto& l : require(j, "lines", "network")) {
        Line line;
        line.from = require(l, "from", "network.lines").get<int>();
        line.to = require(l, "to", "network.lines").get<int>();
        line.x_pu = require(l, "x_pu", "network.lines").get<double>();
        line.limit_mw = l.value("limit_mw", 0.0);
        net.lines.push_back(line);
    }
    net.reference_bus = require(j, "reference_bus", "network").get<int>();
    if (j.contains("states")) {
        for (const auto& s : j["states"]) {
            NetworkState ns;
            ns.probability = require(s, "prob", "network.states").get<double>();
            for (const auto& a : require(s, "lines_available", "network.states"))
                ns.line_available.push_back(a.get<bool>());
            net.states.push_back(ns);
        }
    }
    return net;
}

inline json network_to_json(const Network& net) {
    json j;
    j["buses"] = json::array();
    for (const auto& b : net.buses) j["buses"].push_back(json{{"id", b.id}, {"load_mw", b.load_mw}});
    j["lines"] = json::array();
    for (const auto& l : net.lines)
        j["lines"].push_back(
            json{{"from", l.from}, {"to", l.to}, {"x_pu", l.x_pu}, {"limit_mw", l.limit_mw}});
    j["reference_bus"] = net.reference_bus;
    if (!net.states.empty()) {
        j["states"] = json::array();
        for (const auto& s : net.states) {
            json st;
            st["prob"] = s.probability;
            st["lines_available"] = s.line_available;
            j["states"].push_back(st);
        }
    }
    return j;
}

/// Parse a scenario. `base_dir` resolves relative network file references.
inline Scenario scenario_from_json(const json& j, const std::string& base_dir = ".") {
    using detail_cfg::require;
    Scenario sc;
    sc.name = j.value("name", "scenario");
    sc.seed = j.value("seed", std::uint64_t{1});
    sc.horizon_h = require(j, "horizon_min", "scenario").get<double>() / 60.0;
    sc.dt_h = j.value("dt_min", 1.0) / 60.0;

    const json& pop = require(j, "population", "scenario");
    sc.population.count = require(pop, "count", "population").get<std::size_t>();
    sc.population.C_dist = detail_cfg::parse_dist(require(pop, "C", "population"), "population.C");
    sc.population.R_dist = detail_cfg::parse_dist(require(pop, "R", "population"), "population.R");
    sc.population.p_dist = detail_cfg::parse_dist(require(pop, "p", "population"), "population.p");
    sc.population.setpoint_dist =
        detail_cfg::parse_dist(require(pop, "setpoint", "population"), "population.setpoint");
    sc.population.cop = require(pop, "cop", "population").get<double>();
    sc.population.deadband = require(pop, "deadband", "population").get<double>();
    sc.population.seed = sc.seed;
    std::string hr = pop.value("heat_rate_mode", "cop_times_p");
    if (hr == "cop_times_p") sc.population.heat_rate_mode = HeatRateMode::cop_times_p;
    else if (hr == "p_literal") sc.population.heat_rate_mode = HeatRateMode::p_literal;
    else throw ConfigError("population.heat_rate_mode: expected cop_times_p or p_literal");

    if (j.contains("clusters")) {
        const json& cl = j["clusters"];
        std::string policy = cl.value("policy", "fixed");
        if (policy == "fixed") sc.clusters.kind = ClusterPolicy::Kind::fixed;
        else if (policy == "auto") sc.clusters.kind = ClusterPolicy::Kind::auto_select;
        else throw ConfigError("clusters.policy: expected fixed or auto");
        sc.clusters.count = cl.value("count", std::size_t{8});
        sc.clusters.max_count = cl.value("max", std::size_t{15});
        sc.clusters.selection_sample = cl.value("selection_sample", std::size_t{20000});
    }

    const json& dep = require(j, "deployment", "scenario");
    sc.deploy_t_h = require(dep, "time_min", "deployment").get<double>() / 60.0;
    sc.beta = require(dep, "beta", "deployment").get<double>();

    if (j.contains("uncertainty")) {
        const json& un = j["uncertainty"];
        sc.uncertainty.ambient_mean = un.value("ambient_mean", 32.0);
        if (un.contains("ambient_dev"))
            sc.uncertainty.ambient_dev =
                detail_cfg::parse_dist(un["ambient_dev"], "uncertainty.ambient_dev");
        if (un.contains("setpoint_dev"))
            sc.uncertainty.setpoint_dev =
                detail_cfg::parse_dist(un["setpoint_dev"], "uncertainty.setpoint_dev");
        sc.uncertainty.cumulant_order = un.value("cumulant_order", 6);
    }

    if (j.contains("ort")) {
        sc.ort.bus = require(j["ort"], "bus", "ort").get<int>();
        sc.ort.standby_failure_prob = j["ort"].value("standby_failure_prob", 0.0);
        sc.ort_enabled = j["ort"].value("enabled", true);
    } else {
        sc.ort_enabled = false;
    }

    const json& netj = require(j, "network", "scenario");
    if (netj.is_string()) {
        std::string path = base_dir + "/" + netj.get<std::string>();
        std::ifstream in(path);
        if (!in) throw ConfigError("network: cannot open file " + path);
        json nj;
        try {
            in >> nj;
        } catch (const json::exception& e) {
            throw ConfigError("network file " + path + ": " + e.what());
        }
        sc.network = network_from_json(nj);
    } else {
        sc.network = network_from_json(netj);
    }

    for (const auto& u : j.value("generation_units", json::array()))
        sc.generation_units.push_back(detail_cfg::parse_unit(u, false, "generation_units"));
    for (const auto& u : j.value("reserve_units", json::array()))
        sc.reserve_units.push_back(detail_cfg::parse_unit(u, true, "reserve_units"));

    if (j.contains("evaluation")) {
        const json& ev = j["evaluation"];
        sc.evaluation.prob_floor = ev.value("prob_floor", 1e-9);
        sc.evaluation.max_states = ev.value("max_states", std::size_t{2000000});
        sc.evaluation.max_bus_states = ev.value("max_bus_states", std::size_t{5000});
        sc.evaluation.threads = ev.value("threads", 0u);
        for (const auto& m : ev.value("snapshots_min", json::array()))
            sc.evaluation.snapshot_min.push_back(m.get<double>());
    }
    if (j.contains("mc")) {
        const json& mc = j["mc"];
        sc.mc.dt_s = mc.value("dt_s", 2.0);
        sc.mc.replications = mc.value("replications", std::size_t{120});
        sc.mc.samples = mc.value("samples", std::size_t{20000});
        sc.mc.fleet_subsample = mc.value("fleet_subsample", std::size_t{0});
    }
    sc.validate();
    return sc;
}

/// Canonical serialization; reloading it reproduces the identical run.
inline json scenario_to_json(const Scenario& sc) {
    json j;
    j["name"] = sc.name;
    j["seed"] = sc.seed;
    j["horizon_min"] = sc.horizon_h * 60.0;
    j["dt_min"] = sc.dt_h * 60.0;
    j["population"] = json{{"count", sc.population.count},
                           {"C", detail_cfg::dist_to_json(sc.population.C_dist)},
                           {"R", detail_cfg::dist_to_json(sc.population.R_dist)},
                           {"p", detail_cfg::dist_to_json(sc.population.p_dist)},
                           {"setpoint", detail_cfg::dist_to_json(sc.population.setpoint_dist)},
                           {"cop", sc.population.cop},
                           {"deadband", sc.population.deadband},
                           {"heat_rate_mode", sc.population.heat_rate_mode == HeatRateMode::cop_times_p
                                                  ? "cop_times_p"
                                                  : "p_literal"}};
    j["clusters"] = json{{"policy", sc.clusters.kind == ClusterPolicy::Kind::fixed ? "fixed" : "auto"},
                         {"count", sc.clusters.count},
                         {"max", sc.clusters.max_count},
                         {"selection_sample", sc.clusters.selection_sample}};
    j["deployment"] = json{{"time_min", sc.deploy_t_h * 60.0}, {"beta", sc.beta}};
    j["uncertainty"] = json{{"ambient_mean", sc.uncertainty.ambient_mean},
                            {"ambient_dev", detail_cfg::dist_to_json(sc.uncertainty.ambient_dev)},
                            {"setpoint_dev", detail_cfg::dist_to_json(sc.uncertainty.setpoint_dev)},
                            {"cumulant_order", sc.uncertainty.cumulant_order}};
    if (sc.ort_enabled)
        j["ort"] = json{{"bus", sc.ort.bus},
                        {"standby_failure_prob", sc.ort.standby_failure_prob},
                        {"enabled", true}};
    j["network"] = network_to_json(sc.network);
    j["generation_units"] = json::array();
    for (const auto& u : sc.generation_units)
        j["generation_units"].push_back(detail_cfg::unit_to_json(u, false));
    j["reserve_units"] = json::array();
    for (const auto& u : sc.reserve_units)
        j["reserve_units"].push_back(detail_cfg::unit_to_json(u, true));
    j["evaluation"] = json{{"prob_floor", sc.evaluation.prob_floor},
                           {"max_states", sc.evaluation.max_states},
                           {"max_bus_states", sc.evaluation.max_bus_states},
                           {"threads", sc.evaluation.threads},
                           {"snapshots_min", sc.evaluation.snapshot_min}};
    j["mc"] = json{{"dt_s", sc.mc.dt_s},
                   {"replications", sc.mc.replications},
                   {"samples", sc.mc.samples},
                   {"fleet_subsample", sc.mc.fleet_subsample}};
    return j;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error in ") + path + ": " + e.what());
    }
    std::string dir = ".";
    auto slash = path.find_last_of('/');
    if (slash != std::string::npos) dir = path.substr(0, slash);
    return scenario_from_json(j, dir);
}

/// Stable hash of the canonical serialization, for run manifests.
inline std::uint64_t scenario_hash(const Scenario& sc) { return fnv1a(scenario_to_json(sc).dump()); }

}  // namespace resdyn
