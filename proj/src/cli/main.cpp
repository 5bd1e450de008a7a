#include <algorithm>
#include <complex>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ssw/adaptive.hpp"
#include "ssw/assembly.hpp"
#include "ssw/loadflow.hpp"
#include "ssw/manifest.hpp"
#include "ssw/netmodel.hpp"
#include "ssw/stability.hpp"
#include "ssw/thevenin.hpp"

using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumerical = 4;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Resolves a data file: as given, then against SSW_DATA_PATH entries.
std::string resolve_path(const std::string& path) {
    auto exists = [](const std::string& p) {
        std::ifstream f(p);
        return f.good();
    };
    if (exists(path)) return path;
    if (const char* env = std::getenv("SSW_DATA_PATH")) {
        std::string dirs(env);
        std::size_t pos = 0;
        while (pos <= dirs.size()) {
            auto next = dirs.find(':', pos);
            std::string dir = dirs.substr(
                pos, next == std::string::npos ? std::string::npos : next - pos);
            if (!dir.empty() && exists(dir + "/" + path)) return dir + "/" + path;
            if (next == std::string::npos) break;
            pos = next + 1;
        }
    }
    throw UsageError("cannot open network file '" + path + "'");
}

std::map<std::string, double> parse_kv(const std::string& s) {
    std::map<std::string, double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        auto eq = item.find('=');
        if (eq == std::string::npos)
            throw UsageError("expected k=v in '" + item + "'");
        out[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    }
    return out;
}

ssw::ParameterDomain parse_domain(const std::string& s) {
    ssw::ParameterDomain d;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        auto c1 = item.find(':');
        auto c2 = (c1 == std::string::npos) ? c1 : item.find(':', c1 + 1);
        if (c2 == std::string::npos)
            throw UsageError("expected name:lo:hi in '" + item + "'");
        d.names.push_back(item.substr(0, c1));
        d.lo.push_back(std::stod(item.substr(c1 + 1, c2 - c1 - 1)));
        d.hi.push_back(std::stod(item.substr(c2 + 1)));
    }
    d.validate();
    return d;
}

ssw::GridRep parse_grid(const std::string& s) {
    if (s == "full") return ssw::GridRep::Full;
    if (s == "thev-loads") return ssw::GridRep::TheveninLoads;
    if (s == "thev-noloads") return ssw::GridRep::TheveninNoLoads;
    throw UsageError("unknown grid representation '" + s + "'");
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f << body;
}

void emit(const std::string& out, const json& report, ssw::RunManifest& man) {
    std::string body = report.dump(2);
    body += "\n";
    if (out.empty()) {
        std::cout << body;
    } else {
        write_text(out, body);
        man.write(out + ".manifest.json");
    }
}

int scenario_or_die(const ssw::NetworkModel& net, int sc) {
    for (const auto& s : net.scenarios)
        if (s.id == sc) return sc;
    throw UsageError("unknown scenario " + std::to_string(sc));
}

json model_to_json(const ssw::SvmModel& m) {
    return json{{"sv", m.sv},       {"alpha_y", m.alpha_y},
                {"bias", m.bias},   {"gamma", m.gamma},
                {"c", m.c},         {"platt_a", m.platt_a},
                {"platt_b", m.platt_b}, {"lo", m.lo},
                {"hi", m.hi},       {"artifact_version", ssw::kArtifactVersion}};
}

ssw::SvmModel model_from_json(const json& j) {
    ssw::SvmModel m;
    m.sv = j.at("sv").get<std::vector<std::vector<double>>>();
    m.alpha_y = j.at("alpha_y").get<std::vector<double>>();
    m.bias = j.at("bias");
    m.gamma = j.at("gamma");
    m.c = j.at("c");
    m.platt_a = j.at("platt_a");
    m.platt_b = j.at("platt_b");
    m.lo = j.at("lo").get<std::vector<double>>();
    m.hi = j.at("hi").get<std::vector<double>>();
    return m;
}

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// RFC 4180 row; all fields here are numeric or simple identifiers.
std::string csv_row(const std::vector<std::string>& fields) {
    std::string row;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) row += ",";
        row += fields[i];
    }
    row += "\r\n";
    return row;
}

// ------------------------------------------------------------------ loadflow

int cmd_loadflow(const std::string& net_path, int scenario,
                 const std::string& out) {
    auto net = ssw::load_network(resolve_path(net_path));
    scenario_or_die(net, scenario);
    auto scn = ssw::apply_scenario(net, scenario);
    auto sol = ssw::solve_newton_raphson(scn);

    json buses = json::array();
    for (std::size_t i = 0; i < scn.n_bus(); ++i)
        buses.push_back({{"bus", scn.buses[i].id},
                         {"v_pu", std::abs(sol.v[i])},
                         {"angle_rad", std::arg(sol.v[i])}});
    json report{{"command", "loadflow"},
                {"scenario", scenario},
                {"converged", true},
                {"iterations", sol.iterations},
                {"max_mismatch", sol.max_mismatch},
                {"slack_p_mw", sol.slack_injection.real() * scn.base.s_base_mva},
                {"slack_q_mvar", sol.slack_injection.imag() * scn.base.s_base_mva},
                {"buses", buses}};
    ssw::RunManifest man;
    man.command = "loadflow";
    man.config["scenario"] = std::to_string(scenario);
    man.add_data_file(resolve_path(net_path));
    emit(out, report, man);
    return 0;
}

// ---------------------------------------------------------------------- eigs

int cmd_eigs(const std::string& net_path, int scenario, bool all_scenarios,
             int ibr_version, const std::string& gains_str,
             const std::string& grid_str, const std::string& dump,
             const std::string& out) {
    auto net = ssw::load_network(resolve_path(net_path));
    ssw::SweepContext ctx;
    ctx.net = net;
    if (all_scenarios)
        for (const auto& s : net.scenarios) ctx.scenario_ids.push_back(s.id);
    else
        ctx.scenario_ids = {scenario_or_die(net, scenario)};
    ctx.rep = parse_grid(grid_str);
    ctx.ibr_version = ibr_version;
    if (ibr_version < 1 || ibr_version > 3)
        throw UsageError("--ibr-version must be 1, 2 or 3");
    ctx.fixed_gains = parse_kv(gains_str);

    auto verdict = ssw::is_ps_stable({}, {}, ctx);
    if (verdict.infeasible) throw ssw::InfeasibleError("load flow infeasible");

    json report{{"command", "eigs"},
                {"grid", grid_str},
                {"ibr_version", ibr_version},
                {"scenarios", ctx.scenario_ids},
                {"stable", verdict.stable},
                {"worst_re", verdict.worst_re},
                {"failing_scenarios", verdict.failing_scenarios}};

    // Detailed spectrum (and optional A_ps dump) for the first scenario.
    {
        auto scn = ssw::apply_scenario(net, ctx.scenario_ids.front());
        ssw::IbrSpec dev;
        dev.version = ibr_version;
        for (const auto& [k, v] : ctx.fixed_gains) {
            if (k == "kp_pll") dev.par.kp_pll = v;
            else if (k == "ki_pll") dev.par.ki_pll = v;
            else if (k == "kp_i") dev.par.kp_i = v;
            else if (k == "ki_i") dev.par.ki_i = v;
            else if (k == "kp_dc") dev.par.kp_dc = v;
            else if (k == "ki_dc") dev.par.ki_dc = v;
            else if (k == "kp_2dc") dev.par.kp_2dc = v;
            else if (k == "ki_2dc") dev.par.ki_2dc = v;
            else throw UsageError("unknown gain '" + k + "'");
        }
        scn = ssw::replace_sg_with_ibr(scn, ctx.ibr_bus, dev);
        auto sol = ssw::solve_newton_raphson(scn);
        auto init = ssw::init_dynamic_states(scn, sol);
        ssw::AssembledSystem sys;
        if (ctx.rep == ssw::GridRep::Full) {
            sys = ssw::assemble_full_grid(scn, init, sol);
        } else {
            bool with_loads = ctx.rep == ssw::GridRep::TheveninLoads;
            auto eq = ssw::compute_thevenin(scn, ctx.ibr_bus, with_loads, sol);
            const ssw::DeviceInit& di = init.at_bus(ctx.ibr_bus);
            const ssw::IbrSpec* spec = nullptr;
            for (const auto& b : scn.ibrs)
                if (b.bus == ctx.ibr_bus) spec = &b;
            auto blk = ssw::linearize_ibr(*spec, di, scn.base);
            auto grid_blk =
                ssw::thevenin_grid_block(eq, scn.base, di.v_bus, di.i_inj);
            ssw::ConnectionGraph g;
            g.wires.push_back({{blk.label, "v"}, {"thevenin", "v"}, 1.0});
            g.wires.push_back({{"thevenin", "i"}, {blk.label, "i"}, 1.0});
            sys = ssw::connect({blk, grid_blk}, g);
        }
        auto rep = ssw::eigenvalues(sys);
        json modes = json::array();
        for (const auto& m : rep.modes) {
            json dom = json::array();
            for (const auto& [state, p] : m.dominant)
                dom.push_back({{"state", state}, {"participation", p}});
            modes.push_back({{"re", m.lambda.real()},
                             {"im", m.lambda.imag()},
                             {"freq_hz", m.freq_hz},
                             {"damping", m.damping},
                             {"dominant", dom}});
        }
        report["modes"] = modes;
        if (!dump.empty()) {
            json jd;
            jd["n"] = sys.a_ps.rows();
            json labels = json::array();
            for (const auto& [blk, st] : sys.state_labels)
                labels.push_back(blk + "." + st);
            jd["state_labels"] = labels;
            std::vector<std::vector<double>> rows(sys.a_ps.rows());
            for (Eigen::Index i = 0; i < sys.a_ps.rows(); ++i)
                for (Eigen::Index j = 0; j < sys.a_ps.cols(); ++j)
                    rows[i].push_back(sys.a_ps(i, j));
            jd["a_ps"] = rows;
            write_text(dump, json(jd).dump() + "\n");
        }
    }

    ssw::RunManifest man;
    man.command = "eigs";
    man.config["grid"] = grid_str;
    man.config["ibr_version"] = std::to_string(ibr_version);
    man.config["gains"] = gains_str;
    man.add_data_file(resolve_path(net_path));
    emit(out, report, man);
    return 0;
}

// ------------------------------------------------------------------ thevenin

int cmd_thevenin(const std::string& net_path, int bus, int scenario,
                 bool all_scenarios, int loads_flag, const std::string& out) {
    auto net = ssw::load_network(resolve_path(net_path));
    bool known = false;
    for (const auto& b : net.buses) known = known || b.id == bus;
    if (!known) throw UsageError("unknown bus " + std::to_string(bus));

    std::vector<int> scs;
    if (all_scenarios)
        for (const auto& s : net.scenarios) scs.push_back(s.id);
    else
        scs = {scenario_or_die(net, scenario)};
    std::vector<bool> reps;
    if (loads_flag < 0) reps = {true, false};
    else reps = {loads_flag != 0};

    json rows = json::array();
    for (bool loads : reps)
        for (int sc : scs) {
            auto scn = ssw::apply_scenario(net, sc);
            auto sol = ssw::solve_newton_raphson(scn);
            auto eq = ssw::compute_thevenin(scn, bus, loads, sol);
            rows.push_back({{"scenario", sc},
                            {"include_loads", loads},
                            {"s_sc_mva", eq.s_sc_mva},
                            {"scr", eq.scr},
                            {"x_r", eq.xr},
                            {"v_th", eq.v_th},
                            {"r_th", eq.z_th.real()},
                            {"x_th", eq.z_th.imag()}});
        }
    json report{{"command", "thevenin"}, {"bus", bus}, {"rows", rows}};
    ssw::RunManifest man;
    man.command = "thevenin";
    man.config["bus"] = std::to_string(bus);
    man.add_data_file(resolve_path(net_path));
    emit(out, report, man);
    return 0;
}

// ----------------------------------------------------------------------- map

ssw::Oracle make_oracle(const ssw::SweepContext& ctx,
                        const std::vector<std::string>& names) {
    return [ctx, names](const std::vector<double>& rho) {
        return ssw::is_ps_stable(rho, names, ctx);
    };
}

void write_history(const std::string& path,
                   const std::vector<ssw::LabeledSample>& samples) {
    std::string body;
    for (const auto& s : samples) {
        json j{{"rho", s.rho},
               {"s", s.s},
               {"provenance", s.refinement ? "refinement" : "seed"},
               {"infeasible", s.infeasible},
               {"worst_re", s.worst_re},
               {"failing_scenarios", s.failing_scenarios}};
        body += j.dump() + "\n";
    }
    write_text(path, body);
}

void write_map_csv(const std::string& path, const ssw::ParameterDomain& domain,
                   const ssw::SvmModel& model,
                   const std::vector<ssw::LabeledSample>& samples) {
    // Fixed column order: parameter names sorted, then probability, then label.
    std::vector<std::size_t> order(domain.names.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return domain.names[a] < domain.names[b];
    });
    std::string body;
    std::vector<std::string> head;
    for (auto j : order) head.push_back(domain.names[j]);
    head.push_back("probability");
    head.push_back("label");
    body += csv_row(head);
    for (const auto& s : samples) {
        if (s.infeasible) continue;
        std::vector<std::string> row;
        for (auto j : order) row.push_back(fmt_double(s.rho[j]));
        row.push_back(fmt_double(ssw::predict_probability(model, s.rho)));
        row.push_back(std::to_string(s.s));
        body += csv_row(row);
    }
    write_text(path, body);
}

int cmd_map(const std::string& net_path, const std::string& params_str,
            const std::string& fixed_str, int ibr_version,
            const std::string& grid_str, int n_init, int n_add, int n_cand,
            double p_th, std::uint64_t seed, const std::string& out_prefix) {
    auto domain = parse_domain(params_str);
    auto net = ssw::load_network(resolve_path(net_path));
    ssw::SweepContext ctx;
    ctx.net = net;
    for (const auto& s : net.scenarios) ctx.scenario_ids.push_back(s.id);
    ctx.rep = parse_grid(grid_str);
    ctx.ibr_version = ibr_version;
    ctx.fixed_gains = parse_kv(fixed_str);

    ssw::AsmConfig cfg;
    cfg.n_init = n_init;
    cfg.n_a = n_add;
    cfg.n_r = n_cand;
    cfg.p_th = p_th;
    cfg.rng_seed = seed;
    try {
        cfg.validate();
    } catch (const ssw::SchemaError& e) {
        throw UsageError(e.what());
    }

    auto hist = ssw::run_asm(domain, make_oracle(ctx, domain.names), cfg);

    write_map_csv(out_prefix + ".csv", domain, hist.final_model, hist.samples);
    write_history(out_prefix + ".history.jsonl", hist.samples);
    json jm = model_to_json(hist.final_model);
    jm["param_names"] = domain.names;
    write_text(out_prefix + ".model.json", jm.dump(2) + "\n");

    ssw::RunManifest man;
    man.command = "map";
    man.config["params"] = params_str;
    man.config["fixed"] = fixed_str;
    man.config["grid"] = grid_str;
    man.config["ibr_version"] = std::to_string(ibr_version);
    man.config["n_init"] = std::to_string(n_init);
    man.config["n_add"] = std::to_string(n_add);
    man.config["n_cand"] = std::to_string(n_cand);
    man.config["p_th"] = fmt_double(p_th);
    man.seeds["asm"] = seed;
    man.add_data_file(resolve_path(net_path));
    man.write(out_prefix + ".manifest.json");
    return 0;
}

// ---------------------------------------------------------------------- tune

int cmd_tune(const std::string& net_path, const std::string& params_str,
             const std::string& fixed_str, int ibr_version,
             const std::string& grid_str, int n_init, int n_add, int n_cand,
             double p_th, std::uint64_t seed, const std::string& model_path,
             const std::string& out) {
    auto domain = parse_domain(params_str);
    auto net = ssw::load_network(resolve_path(net_path));
    ssw::SweepContext ctx;
    ctx.net = net;
    for (const auto& s : net.scenarios) ctx.scenario_ids.push_back(s.id);
    ctx.rep = parse_grid(grid_str);
    ctx.ibr_version = ibr_version;
    ctx.fixed_gains = parse_kv(fixed_str);

    ssw::SvmModel model;
    if (!model_path.empty()) {
        std::ifstream f(model_path);
        if (!f) throw UsageError("cannot open model '" + model_path + "'");
        json j = json::parse(f);
        model = model_from_json(j);
    } else {
        ssw::AsmConfig cfg;
        cfg.n_init = n_init;
        cfg.n_a = n_add;
        cfg.n_r = n_cand;
        cfg.p_th = p_th;
        cfg.rng_seed = seed;
        try {
            cfg.validate();
        } catch (const ssw::SchemaError& e) {
            throw UsageError(e.what());
        }
        auto hist = ssw::run_asm(domain, make_oracle(ctx, domain.names), cfg);
        model = hist.final_model;
    }

    auto rho = ssw::argmax_probability(model, domain, 512, seed);
    double prob = ssw::predict_probability(model, rho);
    auto verdict = ssw::is_ps_stable(rho, domain.names, ctx);

    json jr{{"command", "tune"},
            {"param_names", domain.names},
            {"rho_star", rho},
            {"probability", prob},
            {"confirmed_stable", verdict.stable},
            {"worst_re", verdict.worst_re}};
    ssw::RunManifest man;
    man.command = "tune";
    man.config["params"] = params_str;
    man.config["fixed"] = fixed_str;
    man.config["grid"] = grid_str;
    man.config["ibr_version"] = std::to_string(ibr_version);
    man.seeds["asm"] = seed;
    man.add_data_file(resolve_path(net_path));
    emit(out, jr, man);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"small-signal stability workbench"};
    app.require_subcommand(1);

    std::string net_path = "cigre_hv.net";
    int scenario = 1;
    bool all_scenarios = false;
    int ibr_version = 1;
    std::string gains, fixed, grid = "full", dump, out, params, model_path;
    int bus = 10;
    int loads_flag = -1;  // -1: both representations
    int n_init = 100, n_add = 250, n_cand = 20000;
    double p_th = 0.8;
    std::uint64_t seed = 1;

    auto add_common = [&](CLI::App* c) {
        c->add_option("--net", net_path, "network data file");
        c->add_option("--out", out, "report output path (default: stdout)");
    };

    auto* lf = app.add_subcommand("loadflow", "solve the power flow");
    add_common(lf);
    lf->add_option("--scenario", scenario, "scenario id");

    auto* eg = app.add_subcommand("eigs", "closed-loop eigenvalue analysis");
    add_common(eg);
    eg->add_option("--scenario", scenario, "scenario id");
    eg->add_flag("--all-scenarios", all_scenarios, "sweep every scenario");
    eg->add_option("--ibr-version", ibr_version, "IBR control version (1..3)");
    eg->add_option("--gains", gains, "IBR gain overrides, k=v,...");
    eg->add_option("--grid", grid, "full | thev-loads | thev-noloads");
    eg->add_option("--dump", dump, "write A_ps with state labels (JSON)");

    auto* th = app.add_subcommand("thevenin", "Thevenin equivalent report");
    add_common(th);
    th->add_option("--bus", bus, "studied bus");
    th->add_option("--scenario", scenario, "scenario id");
    th->add_flag("--all-scenarios", all_scenarios, "all scenarios");
    th->add_option("--include-loads", loads_flag,
                   "1: with loads, 0: without (default: both)");

    auto* mp = app.add_subcommand("map", "adaptive stability map");
    add_common(mp);
    mp->add_option("--params", params, "domain, name:lo:hi,...")->required();
    mp->add_option("--fixed", fixed, "held gains, k=v,...");
    mp->add_option("--ibr-version", ibr_version, "IBR control version (1..3)");
    mp->add_option("--grid", grid, "full | thev-loads | thev-noloads");
    mp->add_option("--n-init", n_init, "seed samples");
    mp->add_option("--n-add", n_add, "refinement samples per round");
    mp->add_option("--n-cand", n_cand, "refinement candidate pool");
    mp->add_option("--p-th", p_th, "probability threshold");
    mp->add_option("--seed", seed, "rng seed");

    auto* tn = app.add_subcommand("tune", "maximize estimated P(stable)");
    add_common(tn);
    tn->add_option("--params", params, "domain, name:lo:hi,...")->required();
    tn->add_option("--fixed", fixed, "held gains, k=v,...");
    tn->add_option("--ibr-version", ibr_version, "IBR control version (1..3)");
    tn->add_option("--grid", grid, "full | thev-loads | thev-noloads");
    tn->add_option("--n-init", n_init, "seed samples");
    tn->add_option("--n-add", n_add, "refinement samples per round");
    tn->add_option("--n-cand", n_cand, "refinement candidate pool");
    tn->add_option("--p-th", p_th, "probability threshold");
    tn->add_option("--seed", seed, "rng seed");
    tn->add_option("--model", model_path, "saved model (skips retraining)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (lf->parsed()) return cmd_loadflow(net_path, scenario, out);
        if (eg->parsed())
            return cmd_eigs(net_path, scenario, all_scenarios, ibr_version,
                            gains, grid, dump, out);
        if (th->parsed())
            return cmd_thevenin(net_path, bus, scenario, all_scenarios,
                                loads_flag, out);
        if (mp->parsed()) {
            std::string prefix = out.empty() ? "map" : out;
            return cmd_map(net_path, params, fixed, ibr_version, grid, n_init,
                           n_add, n_cand, p_th, seed, prefix);
        }
        if (tn->parsed())
            return cmd_tune(net_path, params, fixed, ibr_version, grid, n_init,
                            n_add, n_cand, p_th, seed, model_path, out);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ssw::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ssw::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const ssw::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}
