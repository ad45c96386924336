// reserve-dyn: aggregate TCL reserve dynamics and short-term reliability
// evaluation. Subcommands: aggregate, distribution, multistate, evaluate,
// oracle, compare. Exit codes: 0 success, 2 configuration error, 3 numerical
// failure.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "resdyn/config.hpp"
#include "resdyn/csvio.hpp"
#include "resdyn/oracle_mc.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using namespace resdyn;

void emit(const std::string& out_path, const CsvTable& table) {
    if (out_path.empty())
        std::cout << table.to_string();
    else
        write_text_file(out_path, table.to_string());
}

CsvTable aggregate_table(const Scenario& sc) {
    auto devices = sample_population(sc.population, sc.uncertainty.ambient_mean);
    auto clusters = build_clusters(sc, devices);
    std::vector<MigrationTimeline> tls;
    tls.reserve(clusters.size());
    for (const auto& c : clusters)
        tls.push_back(build_timeline(c, sc.beta, sc.uncertainty.ambient_mean, sc.deploy_t_h,
                                     sc.population.heat_rate_mode));
    double p0 = aggregate_power(clusters, tls, 0.0);
    CsvTable t;
    t.header = {"time_h", "power_mw", "reserve_mw"};
    for (double tt : sc.time_grid()) {
        double p = aggregate_power(clusters, tls, tt);
        t.rows.push_back({tt, p, reserve_capacity(p0, p)});
    }
    return t;
}

CsvTable distribution_table(const Scenario& sc, double at_min) {
    auto devices = sample_population(sc.population, sc.uncertainty.ambient_mean);
    auto clusters = build_clusters(sc, devices);
    StochasticModel model(clusters, sc.beta, sc.deploy_t_h, sc.uncertainty,
                          sc.population.heat_rate_mode);
    PowerDistribution d = model.distribution(at_min / 60.0);
    CsvTable t;
    t.header = {"x_mw", "pdf", "cdf"};
    double sd = std::max(d.pdf.sd(), 1e-6);
    for (int i = 0; i <= 240; ++i) {
        double x = d.mean_mw - 6.0 * sd + i * (12.0 * sd / 240.0);
        t.rows.push_back({x, d.density(x), d.cdf(x)});
    }
    return t;
}

CsvTable multistate_table(const EvaluationResult& ev, double at_min, double dt_h) {
    std::size_t k = static_cast<std::size_t>(std::llround(at_min / 60.0 / dt_h));
    k = std::min(k, ev.time_h.size() - 1);
    CsvTable t;
    t.header = {"capacity_mw", "probability"};
    for (std::size_t s = 0; s < ev.ort_poly.n_states(); ++s)
        t.rows.push_back({ev.ort_poly.capacities[s], ev.ort_poly.prob(s, k)});
    return t;
}

CsvTable lolp_table(const Scenario& sc, const IndexSeries& ix) {
    CsvTable t;
    t.header = {"time_min", "system"};
    for (const auto& b : sc.network.buses) t.header.push_back("bus_" + std::to_string(b.id));
    for (std::size_t k = 0; k < ix.time_h.size(); ++k) {
        std::vector<double> row{ix.time_h[k] * 60.0, ix.system_lolp[k]};
        for (std::size_t i = 0; i < sc.network.buses.size(); ++i) row.push_back(ix.bus_lolp[i][k]);
        t.rows.push_back(std::move(row));
    }
    return t;
}

CsvTable cumulative_table(const Scenario& sc, const std::vector<double>& time_h,
                          const std::vector<double>& system,
                          const std::vector<std::vector<double>>& per_bus) {
    CsvTable t;
    t.header = {"time_min", "system"};
    for (const auto& b : sc.network.buses) t.header.push_back("bus_" + std::to_string(b.id));
    for (std::size_t k = 0; k < time_h.size(); ++k) {
        std::vector<double> row{time_h[k] * 60.0, system[k]};
        for (std::size_t i = 0; i < sc.network.buses.size(); ++i) row.push_back(per_bus[i][k]);
        t.rows.push_back(std::move(row));
    }
    return t;
}

CsvTable snapshot_table(const Scenario& sc, const StateSnapshot& snap) {
    CsvTable t;
    t.header = {"network_state", "probability", "total_curtailment_mw"};
    for (const auto& b : sc.network.buses) t.header.push_back("ag_bus_" + std::to_string(b.id));
    for (const auto& b : sc.network.buses) t.header.push_back("lc_bus_" + std::to_string(b.id));
    for (const auto& s : snap.states) {
        std::vector<double> row{static_cast<double>(s.network_state), s.probability,
                                s.total_curtailment_mw};
        for (double a : s.avail_gen_mw) row.push_back(a);
        for (double c : s.curtailment_mw) row.push_back(c);
        t.rows.push_back(std::move(row));
    }
    return t;
}

int run_evaluate(const Scenario& sc, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    EvaluationResult ev = evaluate_scenario(sc);
    RunManifest man;
    man.config_hash = scenario_hash(sc);
    man.seed = sc.seed;
    man.tool_version = kVersion;
    man.stage_ms = ev.stage_ms;

    auto save = [&](const std::string& name, const CsvTable& t) {
        man.outputs.push_back({name, write_text_file(out_dir + "/" + name, t.to_string())});
    };
    save("lolp.csv", lolp_table(sc, ev.indices));
    save("eens.csv", cumulative_table(sc, ev.indices.time_h, ev.indices.system_eens_mwh,
                                      ev.indices.bus_eens_mwh));
    save("lole.csv",
         cumulative_table(sc, ev.indices.time_h, ev.indices.system_lole_h, ev.indices.bus_lole_h));
    CsvTable power;
    power.header = {"time_min", "power_mw", "reserve_mw", "sigma_mw"};
    for (std::size_t k = 0; k < ev.time_h.size(); ++k)
        power.rows.push_back(
            {ev.time_h[k] * 60.0, ev.power_mw[k], ev.reserve_mw[k], ev.sigma_mw[k]});
    save("power.csv", power);
    for (const auto& snap : ev.snapshots) {
        char name[64];
        std::snprintf(name, sizeof(name), "states_%ld.csv", std::lround(snap.time_h * 60.0));
        save(name, snapshot_table(sc, snap));
    }
    write_text_file(out_dir + "/manifest.json", man.to_json().dump(2) + "\n");
    std::cout << "evaluate: wrote " << man.outputs.size() + 1 << " files to " << out_dir
              << " (EENS " << csv_num(ev.indices.final_system_eens()) << " MWh, LOLE "
              << csv_num(ev.indices.final_system_lole()) << " h, " << ev.opf_solves
              << " LP solves)\n";
    return 0;
}

int run_oracle(const Scenario& sc, std::size_t samples, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    McIndexResult mc = mc_reliability(sc, samples, sc.seed);
    RunManifest man;
    man.config_hash = scenario_hash(sc);
    man.seed = sc.seed;
    man.tool_version = kVersion;
    auto save = [&](const std::string& name, const CsvTable& t) {
        man.outputs.push_back({name, write_text_file(out_dir + "/" + name, t.to_string())});
    };
    save("lolp.csv", lolp_table(sc, mc.indices));
    save("eens.csv", cumulative_table(sc, mc.indices.time_h, mc.indices.system_eens_mwh,
                                      mc.indices.bus_eens_mwh));
    save("lole.csv", cumulative_table(sc, mc.indices.time_h, mc.indices.system_lole_h,
                                      mc.indices.bus_lole_h));
    if (!mc.mean_power_mw.empty()) {
        CsvTable power;
        power.header = {"time_min", "power_mw"};
        for (std::size_t k = 0; k < mc.indices.time_h.size(); ++k)
            power.rows.push_back({mc.indices.time_h[k] * 60.0, mc.mean_power_mw[k]});
        save("power_mc.csv", power);
    }
    write_text_file(out_dir + "/manifest.json", man.to_json().dump(2) + "\n");
    std::cout << "oracle: " << mc.replications << " replications, " << samples
              << " samples/instant (EENS " << csv_num(mc.indices.final_system_eens())
              << " MWh, LOLE " << csv_num(mc.indices.final_system_lole()) << " h)\n";
    return 0;
}

int run_compare(const Scenario& sc, std::size_t samples, const std::string& out_dir) {
    EvaluationResult ev = evaluate_scenario(sc);
    McIndexResult mc = mc_reliability(sc, samples, sc.seed);
    auto rel = [](double a, double b) { return b != 0.0 ? std::abs(a - b) / std::abs(b) : 0.0; };

    double lolp_anl = 0.0, lolp_mc = 0.0;
    for (std::size_t k = 0; k < ev.indices.system_lolp.size(); ++k) {
        lolp_anl += ev.indices.system_lolp[k];
        lolp_mc += mc.indices.system_lolp[k];
    }
    lolp_anl /= static_cast<double>(ev.indices.system_lolp.size());
    lolp_mc /= static_cast<double>(mc.indices.system_lolp.size());

    CsvTable t;
    t.header = {"metric_id", "analytical", "monte_carlo", "rel_err"};
    double ee_a = ev.indices.final_system_eens(), ee_m = mc.indices.final_system_eens();
    double lo_a = ev.indices.final_system_lole(), lo_m = mc.indices.final_system_lole();
    t.rows.push_back({0, ee_a, ee_m, rel(ee_a, ee_m)});
    t.rows.push_back({1, lo_a, lo_m, rel(lo_a, lo_m)});
    t.rows.push_back({2, lolp_anl, lolp_mc, rel(lolp_anl, lolp_mc)});

    std::cout << "metric,analytical,monte_carlo,rel_err\n"
              << "eens_mwh," << csv_num(ee_a) << "," << csv_num(ee_m) << "," << csv_num(rel(ee_a, ee_m)) << "\n"
              << "lole_h," << csv_num(lo_a) << "," << csv_num(lo_m) << "," << csv_num(rel(lo_a, lo_m)) << "\n"
              << "mean_lolp," << csv_num(lolp_anl) << "," << csv_num(lolp_mc) << ","
              << csv_num(rel(lolp_anl, lolp_mc)) << "\n";
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_text_file(out_dir + "/compare.csv", t.to_string());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Aggregate TCL operating-reserve dynamics and short-term reliability"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path, out_path;
    double at_min = 0.0;
    std::size_t samples = 0;

    auto add_common = [&](CLI::App* cmd, bool needs_out) {
        cmd->add_option("--config", config_path, "scenario JSON file")->required();
        auto* opt = cmd->add_option("--out", out_path, "output file or directory");
        if (needs_out) opt->required();
    };
    CLI::App* agg = app.add_subcommand("aggregate", "deterministic power/reserve trajectory");
    add_common(agg, false);
    CLI::App* dist = app.add_subcommand("distribution", "power pdf/cdf at one instant");
    add_common(dist, false);
    dist->add_option("--at", at_min, "minutes from scenario start")->required();
    CLI::App* multi = app.add_subcommand("multistate", "reserve capacity states at one instant");
    add_common(multi, false);
    multi->add_option("--at", at_min, "minutes from scenario start")->required();
    CLI::App* eval = app.add_subcommand("evaluate", "full reliability evaluation");
    add_common(eval, true);
    CLI::App* orac = app.add_subcommand("oracle", "Monte Carlo reliability evaluation");
    add_common(orac, true);
    orac->add_option("--samples", samples, "state samples per instant");
    CLI::App* comp = app.add_subcommand("compare", "analytical vs Monte Carlo side by side");
    add_common(comp, false);
    comp->add_option("--samples", samples, "state samples per instant");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        resdyn::Scenario sc = resdyn::load_scenario(config_path);
        if (samples == 0) samples = sc.mc.samples;
        if (agg->parsed()) {
            emit(out_path, aggregate_table(sc));
            return 0;
        }
        if (dist->parsed()) {
            emit(out_path, distribution_table(sc, at_min));
            return 0;
        }
        if (multi->parsed()) {
            resdyn::EvaluationResult ev = resdyn::evaluate_scenario(sc);
            emit(out_path, multistate_table(ev, at_min, sc.dt_h));
            return 0;
        }
        if (eval->parsed()) return run_evaluate(sc, out_path);
        if (orac->parsed()) return run_oracle(sc, samples, out_path);
        if (comp->parsed()) return run_compare(sc, samples, out_path);
    } catch (const resdyn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
