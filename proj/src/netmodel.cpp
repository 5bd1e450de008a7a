#include "ssw/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ssw {

const BusSpec& NetworkModel::bus(int id) const {
    for (const auto& b : buses)
        if (b.id == id) return b;
    throw SchemaError("unknown bus id " + std::to_string(id));
}

int NetworkModel::bus_index(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return static_cast<int>(i);
    throw SchemaError("unknown bus id " + std::to_string(id));
}

namespace {

std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

struct Cursor {
    std::string section;
    int line_no = 0;
    std::string origin;
    [[noreturn]] void fail(const std::string& what) const {
        throw SchemaError(origin + ":" + std::to_string(line_no) + " [" +
                          section + "] " + what);
    }
};

double to_num(const std::string& tok, const Cursor& cur) {
    try {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) cur.fail("bad number '" + tok + "'");
        return v;
    } catch (const std::exception&) {
        cur.fail("bad number '" + tok + "'");
    }
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string t;
    while (is >> t) out.push_back(t);
    return out;
}

void set_sg_param(SgParams& p, const std::string& key, double v, const Cursor& cur) {
    static const std::map<std::string, double SgParams::*> fields = {
        {"rs", &SgParams::rs},       {"xd", &SgParams::xd},
        {"xq", &SgParams::xq},       {"xdp", &SgParams::xdp},
        {"xqp", &SgParams::xqp},     {"xdpp", &SgParams::xdpp},
        {"xqpp", &SgParams::xqpp},   {"xls", &SgParams::xls},
        {"Tdo_p", &SgParams::Tdo_p}, {"Tdo_pp", &SgParams::Tdo_pp},
        {"Tqo_p", &SgParams::Tqo_p}, {"Tqo_pp", &SgParams::Tqo_pp},
        {"H", &SgParams::H},         {"D", &SgParams::D},
        {"droop", &SgParams::droop}, {"Tsr", &SgParams::Tsr},
        {"Tsm", &SgParams::Tsm},     {"Tch", &SgParams::Tch},
        {"Trh", &SgParams::Trh},     {"Fhp", &SgParams::Fhp},
        {"Ka", &SgParams::Ka},       {"Ta", &SgParams::Ta},
        {"Ke", &SgParams::Ke},       {"Te", &SgParams::Te},
        {"Kf", &SgParams::Kf},       {"Tf", &SgParams::Tf}};
    auto it = fields.find(key);
    if (it == fields.end()) cur.fail("unknown SG parameter '" + key + "'");
    p.*(it->second) = v;
}

void set_ibr_param(IbrParams& p, const std::string& key, double v, const Cursor& cur) {
    static const std::map<std::string, double IbrParams::*> fields = {
        {"R", &IbrParams::R},           {"L", &IbrParams::L},
        {"Cf", &IbrParams::Cf},         {"Rf", &IbrParams::Rf},
        {"C_dc", &IbrParams::C_dc_f},   {"v_dc_base", &IbrParams::v_dc_base},
        {"kp_pll", &IbrParams::kp_pll}, {"ki_pll", &IbrParams::ki_pll},
        {"kp_i", &IbrParams::kp_i},     {"ki_i", &IbrParams::ki_i},
        {"kp_dc", &IbrParams::kp_dc},   {"ki_dc", &IbrParams::ki_dc},
        {"kp_2dc", &IbrParams::kp_2dc}, {"ki_2dc", &IbrParams::ki_2dc}};
    auto it = fields.find(key);
    if (it == fields.end()) cur.fail("unknown IBR parameter '" + key + "'");
    p.*(it->second) = v;
}

}  // namespace

NetworkModel parse_network(const std::string& text, const std::string& origin) {
    NetworkModel net;
    SgParams sg_defaults;
    IbrParams ibr_defaults;
    Cursor cur;
    cur.origin = origin;

    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        ++cur.line_no;
        auto hash = raw.find('#');
        if (hash != std::string::npos) raw = raw.substr(0, hash);
        std::string line = trim(raw);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') cur.fail("malformed section header");
            cur.section = line.substr(1, line.size() - 2);
            continue;
        }

        auto eq = line.find('=');
        if (eq != std::string::npos) {
            std::string key = trim(line.substr(0, eq));
            std::string val = trim(line.substr(eq + 1));
            if (cur.section.empty()) {
                if (key == "schema-version")
                    net.schema_version = static_cast<int>(to_num(val, cur));
                else
                    cur.fail("unknown top-level key '" + key + "'");
            } else if (cur.section == "system") {
                if (key == "s_base_mva") net.base.s_base_mva = to_num(val, cur);
                else if (key == "f_hz") net.base.f_hz = to_num(val, cur);
                else cur.fail("unknown system key '" + key + "'");
            } else if (cur.section == "generators") {
                set_sg_param(sg_defaults, key, to_num(val, cur), cur);
            } else if (cur.section == "ibrs") {
                set_ibr_param(ibr_defaults, key, to_num(val, cur), cur);
            } else {
                cur.fail("unexpected key '" + key + "'");
            }
            continue;
        }

        auto tok = split_ws(line);
        auto need = [&](std::size_t n) {
            if (tok.size() != n)
                cur.fail("expected " + std::to_string(n) + " fields, got " +
                         std::to_string(tok.size()));
        };
        if (cur.section == "buses") {
            need(3);
            BusSpec b;
            b.id = static_cast<int>(to_num(tok[0], cur));
            b.v_base_kv = to_num(tok[1], cur);
            if (tok[2] == "slack") b.kind = BusKind::Slack;
            else if (tok[2] == "pv") b.kind = BusKind::Pv;
            else if (tok[2] == "pq") b.kind = BusKind::Pq;
            else cur.fail("unknown bus kind '" + tok[2] + "'");
            if (b.v_base_kv <= 0) cur.fail("v_base_kv must be positive");
            net.buses.push_back(b);
        } else if (cur.section == "branches") {
            need(5);
            BranchSpec b;
            b.from = static_cast<int>(to_num(tok[0], cur));
            b.to = static_cast<int>(to_num(tok[1], cur));
            b.r = to_num(tok[2], cur);
            b.x = to_num(tok[3], cur);
            b.b_shunt = to_num(tok[4], cur);
            if (b.r < 0) cur.fail("branch r must be >= 0");
            if (b.x == 0) cur.fail("branch x must be nonzero");
            if (b.b_shunt < 0) cur.fail("branch b_shunt must be >= 0");
            net.branches.push_back(b);
        } else if (cur.section == "transformers") {
            need(7);
            TransformerSpec t;
            t.from = static_cast<int>(to_num(tok[0], cur));
            t.to = static_cast<int>(to_num(tok[1], cur));
            t.s_nom_mva = to_num(tok[2], cur);
            t.r_w = to_num(tok[3], cur);
            t.x_w = to_num(tok[4], cur);
            t.r_fe = to_num(tok[5], cur);
            t.x_m = to_num(tok[6], cur);
            if (t.s_nom_mva <= 0) cur.fail("transformer s_nom must be positive");
            if (t.r_w < 0) cur.fail("transformer r_w must be >= 0");
            net.transformers.push_back(t);
        } else if (cur.section == "loads") {
            need(3);
            LoadSpec l;
            l.bus = static_cast<int>(to_num(tok[0], cur));
            l.p_mw = to_num(tok[1], cur);
            l.q_mvar = to_num(tok[2], cur);
            if (l.p_mw <= 0) cur.fail("load p must be positive");
            net.loads.push_back(l);
        } else if (cur.section == "shunts") {
            need(2);
            ShuntSpec s;
            s.bus = static_cast<int>(to_num(tok[0], cur));
            s.q_mvar = to_num(tok[1], cur);
            net.shunts.push_back(s);
        } else if (cur.section == "generators") {
            if (tok.size() != 4 && tok.size() != 5)
                cur.fail("expected 4 or 5 fields, got " +
                         std::to_string(tok.size()));
            SgSpec g;
            g.bus = static_cast<int>(to_num(tok[0], cur));
            g.s_nom_mva = to_num(tok[1], cur);
            g.v0 = to_num(tok[2], cur);
            g.p0_mw = to_num(tok[3], cur);
            if (g.s_nom_mva <= 0) cur.fail("generator s_nom must be positive");
            g.par = sg_defaults;
            // optional per-machine transient reactance override
            if (tok.size() == 5) g.par.xdp = to_num(tok[4], cur);
            net.generators.push_back(g);
        } else if (cur.section == "ibrs") {
            need(5);
            IbrSpec b;
            b.bus = static_cast<int>(to_num(tok[0], cur));
            b.s_nom_mva = to_num(tok[1], cur);
            b.unit_count = static_cast<int>(to_num(tok[2], cur));
            b.version = static_cast<int>(to_num(tok[3], cur));
            b.p0_mw = to_num(tok[4], cur);
            if (b.s_nom_mva <= 0) cur.fail("ibr s_nom must be positive");
            if (b.version < 1 || b.version > 3) cur.fail("ibr version must be 1..3");
            b.par = ibr_defaults;
            net.ibrs.push_back(b);
        } else if (cur.section == "scenarios") {
            std::size_t ng = net.generators.size();
            need(1 + 3 * ng);
            Scenario s;
            s.id = static_cast<int>(to_num(tok[0], cur));
            for (std::size_t k = 0; k < ng; ++k)
                s.s_nom_mva.push_back(to_num(tok[1 + k], cur));
            for (std::size_t k = 0; k < ng; ++k)
                s.p0_mw.push_back(to_num(tok[1 + ng + k], cur));
            for (std::size_t k = 0; k < ng; ++k)
                s.v0.push_back(to_num(tok[1 + 2 * ng + k], cur));
            net.scenarios.push_back(s);
        } else {
            cur.fail("record outside a known section");
        }
    }

    if (net.schema_version != 1)
        throw SchemaError(origin + ": missing or unsupported schema-version");
    int n_slack = 0;
    for (const auto& b : net.buses) n_slack += (b.kind == BusKind::Slack) ? 1 : 0;
    if (n_slack != 1)
        throw SchemaError(origin + ": expected exactly one slack bus, found " +
                          std::to_string(n_slack));
    auto check_bus = [&](int id, const char* what) {
        for (const auto& b : net.buses)
            if (b.id == id) return;
        throw SchemaError(origin + ": " + what + " references unknown bus " +
                          std::to_string(id));
    };
    for (const auto& b : net.branches) { check_bus(b.from, "branch"); check_bus(b.to, "branch"); }
    for (const auto& t : net.transformers) { check_bus(t.from, "transformer"); check_bus(t.to, "transformer"); }
    for (const auto& l : net.loads) check_bus(l.bus, "load");
    for (const auto& s : net.shunts) check_bus(s.bus, "shunt");
    for (const auto& g : net.generators) check_bus(g.bus, "generator");
    for (const auto& b : net.ibrs) check_bus(b.bus, "ibr");
    return net;
}

NetworkModel load_network(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw SchemaError("cannot open network file: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_network(buf.str(), path);
}

NetworkModel apply_scenario(const NetworkModel& net, int scenario_id) {
    const Scenario* sc = nullptr;
    for (const auto& s : net.scenarios)
        if (s.id == scenario_id) sc = &s;
    if (!sc) throw SchemaError("unknown scenario " + std::to_string(scenario_id));

    NetworkModel out = net;
    for (std::size_t k = 0; k < out.generators.size(); ++k) {
        auto& g = out.generators[k];
        g.s_nom_mva = sc->s_nom_mva[k];
        g.p0_mw = sc->p0_mw[k];
        g.v0 = sc->v0[k];
        // the generator step-up transformer is rated with its machine
        for (auto& t : out.transformers)
            if (t.from == g.bus || t.to == g.bus) t.s_nom_mva = g.s_nom_mva;
    }
    for (auto& b : out.ibrs) {
        // an IBR that replaced a generator keeps that generator's scenario row
        for (std::size_t k = 0; k < net.generators.size(); ++k)
            if (net.generators[k].bus == b.bus) {
                b.s_nom_mva = sc->s_nom_mva[k];
                b.p0_mw = sc->p0_mw[k];
                b.v0 = sc->v0[k];
            }
    }
    out.applied_scenario = scenario_id;
    return out;
}

NetworkModel replace_sg_with_ibr(const NetworkModel& net, int bus, IbrSpec ibr) {
    NetworkModel out = net;
    auto it = std::find_if(out.generators.begin(), out.generators.end(),
                           [&](const SgSpec& g) { return g.bus == bus; });
    if (it == out.generators.end())
        throw SchemaError("no SG at bus " + std::to_string(bus));
    ibr.bus = bus;
    ibr.s_nom_mva = it->s_nom_mva;
    ibr.p0_mw = it->p0_mw;
    ibr.v0 = it->v0;
    out.generators.erase(it);
    out.ibrs.push_back(ibr);
    return out;
}

}  // namespace ssw
