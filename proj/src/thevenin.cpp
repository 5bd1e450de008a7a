#include "ssw/thevenin.hpp"

#include "ssw/loadflow.hpp"

namespace ssw {

namespace {

Complex machine_source_z(const NetworkModel& net, double s_nom_mva,
                         const SgParams& p) {
    return Complex(p.rs, p.xdp) * net.base.s_base_mva / s_nom_mva;
}

}  // namespace

TheveninEquivalent compute_thevenin(const NetworkModel& net, int bus,
                                    bool include_loads,
                                    const LoadflowResult& sol) {
    const auto n = static_cast<Eigen::Index>(net.n_bus());
    net.bus_index(bus);  // validates the bus id

    YbusOptions yopt;
    yopt.include_loads = include_loads;
    yopt.include_charging = include_loads;
    MatC y = build_ybus(net, yopt);

    // remaining machines as source admittances; the studied device excluded.
    // IBRs other than the studied one keep their (replaced) SG impedance
    // convention only if an SG is present; in this artifact the grid side is
    // all-SG, so only generators contribute.
    for (const auto& g : net.generators) {
        if (g.bus == bus) continue;
        int i = net.bus_index(g.bus);
        y(i, i) += 1.0 / machine_source_z(net, g.s_nom_mva, g.par);
    }

    Eigen::PartialPivLU<MatC> lu(y);
    {
        Eigen::JacobiSVD<MatC> svd(y);
        double smin = svd.singularValues().minCoeff();
        if (!(smin > 1e-12))
            throw NumericalError("singular reduced admittance matrix at bus " +
                                 std::to_string(bus));
    }
    MatC z = lu.solve(MatC::Identity(n, n));

    TheveninEquivalent eq;
    eq.include_loads = include_loads;
    eq.scenario = net.applied_scenario;
    int k = net.bus_index(bus);
    eq.z_th = z(k, k);

    // EMF-source reduction for v_th: E = V + z_src I from the load flow
    YbusOptions full;
    full.include_loads = false;
    full.include_charging = true;
    VecC i_inj = build_ybus(net, full) * sol.v;
    VecC i_src = VecC::Zero(n);
    for (const auto& g : net.generators) {
        if (g.bus == bus) continue;
        int i = net.bus_index(g.bus);
        Complex zsrc = machine_source_z(net, g.s_nom_mva, g.par);
        Complex emf = sol.v[i] + zsrc * i_inj[i];
        i_src[i] = emf / zsrc;
    }
    eq.v_th_c = (z * i_src)(k);
    eq.v_th = std::abs(eq.v_th_c);
    eq.s_sc_mva = net.base.s_base_mva / std::abs(eq.z_th);
    eq.scr = eq.s_sc_mva / 350.0;
    eq.xr = eq.z_th.imag() / eq.z_th.real();
    return eq;
}

namespace {

struct ThevResidual {
    double r, x, wb;
    template <class T>
    void operator()(const T* s, const T* u, T* out) const {
        // current from the device terminal through z_th into the EMF
        out[0] = T(wb / x) * (u[0] - u[2] - T(r) * s[0] + T(x) * s[1]);
        out[1] = T(wb / x) * (u[1] - u[3] - T(r) * s[1] - T(x) * s[0]);
    }
};
struct ThevOutput {
    template <class T>
    void operator()(const T* s, const T*, T* out) const {
        out[0] = s[0];
        out[1] = s[1];
    }
};

}  // namespace

StateSpaceBlock thevenin_grid_block(const TheveninEquivalent& eq,
                                    const PerUnitBase& base, Complex v_port,
                                    Complex i_port) {
    if (eq.z_th.real() < 0)
        throw SchemaError("thevenin_grid_block: negative resistance equivalent");
    StateSpaceBlock b;
    b.label = "thevenin";
    double r = eq.z_th.real(), x = eq.z_th.imag(), wb = base.omega_base();
    ThevResidual fr{r, x, wb};
    ThevOutput gr;
    // EMF consistent with the device operating point: e = v - z_th i
    Complex e = v_port - eq.z_th * i_port;
    Vec x0(2), u0(4);
    x0 << i_port.real(), i_port.imag();
    u0 << v_port.real(), v_port.imag(), e.real(), e.imag();

    b.x0 = x0;
    b.u0 = u0;
    b.in_ports = {{"v", PortKind::VoltageDq, 2}, {"e", PortKind::VoltageDq, 2}};
    b.out_ports = {{"i", PortKind::CurrentDq, 2}};
    b.state_names = {"id", "iq"};
    b.A.resize(2, 2);
    b.A << -wb * r / x, wb, -wb, -wb * r / x;
    b.B.resize(2, 4);
    b.B << wb / x, 0, -wb / x, 0, 0, wb / x, 0, -wb / x;
    b.C = Mat::Identity(2, 2);
    b.D = Mat::Zero(2, 4);
    b.f = [fr](const Vec& xs, const Vec& us) {
        Vec out(2);
        fr(xs.data(), us.data(), out.data());
        return out;
    };
    b.g = [](const Vec& xs, const Vec&) { return Vec(xs.head(2)); };
    return b;
}

}  // namespace ssw
