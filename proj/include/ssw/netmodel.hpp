#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssw {

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PerUnitBase {
    double s_base_mva = 100.0;
    double f_hz = 50.0;
    double omega_base() const { return 2.0 * 3.14159265358979323846 * f_hz; }
};

enum class BusKind { Slack, Pv, Pq };

struct BusSpec {
    int id = 0;
    double v_base_kv = 0.0;
    BusKind kind = BusKind::Pq;
};

// Series RL branch with equally split shunt charging; impedances in pu on
// the system base.
struct BranchSpec {
    int from = 0, to = 0;
    double r = 0.0, x = 0.0, b_shunt = 0.0;
};

// Two-winding transformer, T-circuit; r_w/x_w are the TOTAL winding values
// in pu on s_nom, split equally between the two sides.
struct TransformerSpec {
    int from = 0, to = 0;
    double s_nom_mva = 0.0;
    double r_w = 0.0, x_w = 0.0;
    double r_fe = 500.0, x_m = 100.0;
};

struct LoadSpec {
    int bus = 0;
    double p_mw = 0.0, q_mvar = 0.0;
};

// Shunt compensation device (capacitive MVAr at nominal voltage).
struct ShuntSpec {
    int bus = 0;
    double q_mvar = 0.0;
};

// Sauer-Pai machine constants plus governor, steam turbine and IEEE type 1
// AVR constants; all pu on the machine base, time constants in seconds.
struct SgParams {
    double rs = 0.003;
    double xd = 1.8, xq = 1.7;
    double xdp = 0.3, xqp = 0.55;
    double xdpp = 0.25, xqpp = 0.25;
    double xls = 0.2;
    double Tdo_p = 8.0, Tdo_pp = 0.03;
    double Tqo_p = 0.4, Tqo_pp = 0.05;
    double H = 3.5, D = 1.0;
    double droop = 0.05;
    double Tsr = 0.1, Tsm = 0.3;        // governor
    double Tch = 0.3, Trh = 7.0;        // steam turbine
    double Fhp = 0.3;
    double Ka = 20.0, Ta = 0.02;        // AVR
    double Ke = 1.0, Te = 0.2;
    double Kf = 0.002, Tf = 1.0;
};

struct SgSpec {
    int bus = 0;
    double s_nom_mva = 0.0;
    double v0 = 1.0;      // voltage set point (pu)
    double p0_mw = 0.0;   // dispatch target
    SgParams par;
};

// Grid-following IBR (aggregated plant).  Filter values pu on s_nom; gains
// pu on the control base.
struct IbrParams {
    double R = 0.05, L = 0.15;
    double Cf = 0.05, Rf = 0.0016;
    double C_dc_f = 0.350;        // dc-link capacitance per unit converter, farad
    double v_dc_base = 1500.0;    // volt
    double kp_pll = 0.77, ki_pll = 376.0;
    double kp_i = 0.64, ki_i = 48.0;
    double kp_dc = 3.0, ki_dc = 500.0;
    double kp_2dc = 3.0, ki_2dc = 245.0;
};

struct IbrSpec {
    int bus = 0;
    double s_nom_mva = 350.0;
    int unit_count = 70;
    int version = 1;  // 1: ideal dc source, 2: v_dc PI, 3: v_dc^2 PI
    double v0 = 1.0;
    double p0_mw = 0.0;
    IbrParams par;
    // dc time constant tau = C * V_dc^2 / S_unit; identical units make the
    // aggregated plant's tau equal to the single converter's
    double tau_dc() const {
        double s_unit_va = s_nom_mva * 1e6 / unit_count;
        return par.C_dc_f * par.v_dc_base * par.v_dc_base / s_unit_va;
    }
};

struct Scenario {
    int id = 0;
    std::vector<double> s_nom_mva;  // per generator bus, in [generators] order
    std::vector<double> p0_mw;
    std::vector<double> v0;
};

struct ParameterDomain {
    std::vector<std::string> names;
    std::vector<double> lo, hi;
    std::size_t dim() const { return names.size(); }
    void validate() const {
        if (names.empty()) throw SchemaError("parameter domain is empty");
        for (std::size_t j = 0; j < names.size(); ++j)
            if (!(lo[j] < hi[j]))
                throw SchemaError("parameter domain bound lo >= hi for " + names[j]);
    }
};

struct NetworkModel {
    PerUnitBase base;
    int schema_version = 0;
    std::vector<BusSpec> buses;
    std::vector<BranchSpec> branches;
    std::vector<TransformerSpec> transformers;
    std::vector<LoadSpec> loads;
    std::vector<ShuntSpec> shunts;
    std::vector<SgSpec> generators;
    std::vector<IbrSpec> ibrs;
    std::vector<Scenario> scenarios;
    int applied_scenario = 1;

    const BusSpec& bus(int id) const;
    int bus_index(int id) const;  // dense 0-based index
    std::size_t n_bus() const { return buses.size(); }
};

// Parses the sectioned text format documented in data/cigre_hv.net.
NetworkModel load_network(const std::string& path);
NetworkModel parse_network(const std::string& text, const std::string& origin);

// Returns a copy with generator ratings/dispatch/set points replaced per the
// scenario row; generator step-up transformer ratings follow the machine.
NetworkModel apply_scenario(const NetworkModel& net, int scenario_id);

// Replaces the SG at `bus` with the given IBR (same s_nom and dispatch).
NetworkModel replace_sg_with_ibr(const NetworkModel& net, int bus, IbrSpec ibr);

}  // namespace ssw
