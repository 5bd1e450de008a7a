#include "ssw/components.hpp"

#include <cmath>

#include "ssw/dual.hpp"

namespace ssw {

namespace {

using std::cos;
using std::sin;
using std::sqrt;

// Rotation into the local frame (multiply by e^{-j th}) and back.
template <class T>
void to_local(T th, T xd, T xq, T& ld, T& lq) {
    T c = cos(th), s = sin(th);
    ld = xd * c + xq * s;
    lq = xq * c - xd * s;
}
template <class T>
void to_global(T th, T xd, T xq, T& gd, T& gq) {
    T c = cos(th), s = sin(th);
    gd = xd * c - xq * s;
    gq = xq * c + xd * s;
}

// Exact Jacobians of a templated map via forward-mode dual numbers.
template <class F>
void jacobians(const F& fn, const Vec& x0, const Vec& u0, int n_out, Mat& jx,
               Mat& ju) {
    const int n = static_cast<int>(x0.size());
    const int m = static_cast<int>(u0.size());
    std::vector<Dual> x(n), u(m), out(n_out);
    for (int i = 0; i < n; ++i) x[i] = Dual(x0[i]);
    for (int i = 0; i < m; ++i) u[i] = Dual(u0[i]);
    jx.resize(n_out, n);
    ju.resize(n_out, m);
    for (int j = 0; j < n; ++j) {
        x[j].d = 1.0;
        fn(x.data(), u.data(), out.data());
        for (int i = 0; i < n_out; ++i) jx(i, j) = out[i].d;
        x[j].d = 0.0;
    }
    for (int j = 0; j < m; ++j) {
        u[j].d = 1.0;
        fn(x.data(), u.data(), out.data());
        for (int i = 0; i < n_out; ++i) ju(i, j) = out[i].d;
        u[j].d = 0.0;
    }
}

template <class F>
Vec eval_map(const F& fn, const Vec& x, const Vec& u, int n_out) {
    std::vector<double> out(n_out);
    fn(x.data(), u.data(), out.data());
    return Eigen::Map<Vec>(out.data(), n_out);
}

template <class Ff, class Gf>
StateSpaceBlock make_block(std::string label, Vec x0, Vec u0, int n_y, Ff ff,
                           Gf gf, std::vector<PortSpec> in_ports,
                           std::vector<PortSpec> out_ports,
                           std::vector<std::string> state_names) {
    StateSpaceBlock b;
    b.label = std::move(label);
    b.x0 = std::move(x0);
    b.u0 = std::move(u0);
    const int n_x = static_cast<int>(b.x0.size());
    jacobians(ff, b.x0, b.u0, n_x, b.A, b.B);
    jacobians(gf, b.x0, b.u0, n_y, b.C, b.D);
    b.in_ports = std::move(in_ports);
    b.out_ports = std::move(out_ports);
    b.state_names = std::move(state_names);
    b.f = [ff, n_x](const Vec& x, const Vec& u) { return eval_map(ff, x, u, n_x); };
    b.g = [gf, n_y](const Vec& x, const Vec& u) { return eval_map(gf, x, u, n_y); };
    return b;
}

void check_equilibrium(const StateSpaceBlock& b) {
    double r = b.f(b.x0, b.u0).cwiseAbs().maxCoeff();
    if (!(r <= 1e-8))
        throw NumericalError(b.label + ": init is not an equilibrium (residual " +
                             std::to_string(r) + ")");
}

}  // namespace

int StateSpaceBlock::in_offset(const std::string& port) const {
    int off = 0;
    for (const auto& p : in_ports) {
        if (p.name == port) return off;
        off += p.width;
    }
    throw SchemaError(label + ": no input port '" + port + "'");
}

int StateSpaceBlock::out_offset(const std::string& port) const {
    int off = 0;
    for (const auto& p : out_ports) {
        if (p.name == port) return off;
        off += p.width;
    }
    throw SchemaError(label + ": no output port '" + port + "'");
}

const PortSpec& StateSpaceBlock::in_port(const std::string& port) const {
    for (const auto& p : in_ports)
        if (p.name == port) return p;
    throw SchemaError(label + ": no input port '" + port + "'");
}

const PortSpec& StateSpaceBlock::out_port(const std::string& port) const {
    for (const auto& p : out_ports)
        if (p.name == port) return p;
    throw SchemaError(label + ": no output port '" + port + "'");
}

// ------------------------------------------------------------------ SG

namespace {

struct SgCtx {
    SgParams p;
    double scale;  // system pu current -> machine pu
    double wb;
    double k1, k2, k3, k4, gd, gq;
};

// states: th, dw, Eqp, psi1d, Edp, psi2q, xg1, xg2, xt1, xt2, Vr, Efd, xf
// inputs: P_ref, V_ref, iD, iQ (global frame, system pu)
struct SgResidual {
    SgCtx c;
    template <class T>
    void operator()(const T* x, const T* u, T* out) const {
        const auto& p = c.p;
        T th = x[0], dw = x[1], eqp = x[2], psi1d = x[3], edp = x[4],
          psi2q = x[5], xg1 = x[6], xg2 = x[7], xt1 = x[8], xt2 = x[9],
          vr = x[10], efd = x[11], xf = x[12];
        T pref = u[0], vref = u[1];
        T id, iq;
        to_local(th, u[2] * T(c.scale), u[3] * T(c.scale), id, iq);
        T w = T(1.0) + dw;
        T psid = T(-p.xdpp) * id + T(c.k1) * eqp + T(c.k2) * psi1d;
        T psiq = T(-p.xqpp) * iq - T(c.k3) * edp + T(c.k4) * psi2q;
        T vd = T(-p.rs) * id - w * psiq;
        T vq = T(-p.rs) * iq + w * psid;
        T te = psid * iq - psiq * id;
        T tm = T(p.Fhp) * xt1 + T(1.0 - p.Fhp) * xt2;
        T vt = sqrt(vd * vd + vq * vq);
        T vfb = T(p.Kf / p.Tf) * efd - xf;
        T pc = pref - dw / T(p.droop);
        out[0] = T(c.wb) * dw;
        out[1] = (tm - te - T(p.D) * dw) / T(2.0 * p.H);
        out[2] = (-eqp -
                  T(p.xd - p.xdp) *
                      (id - T(c.gd) * (psi1d + T(p.xdp - p.xls) * id - eqp)) +
                  efd) /
                 T(p.Tdo_p);
        out[3] = (-psi1d + eqp - T(p.xdp - p.xls) * id) / T(p.Tdo_pp);
        out[4] = (-edp + T(p.xq - p.xqp) *
                             (iq - T(c.gq) * (psi2q + T(p.xqp - p.xls) * iq + edp))) /
                 T(p.Tqo_p);
        out[5] = (-psi2q - edp - T(p.xqp - p.xls) * iq) / T(p.Tqo_pp);
        out[6] = (pc - xg1) / T(p.Tsr);
        out[7] = (xg1 - xg2) / T(p.Tsm);
        out[8] = (xg2 - xt1) / T(p.Tch);
        out[9] = (xt1 - xt2) / T(p.Trh);
        out[10] = (T(p.Ka) * (vref - vt - vfb) - vr) / T(p.Ta);
        out[11] = (vr - T(p.Ke) * efd) / T(p.Te);
        out[12] = (T(p.Kf / p.Tf) * efd - xf) / T(p.Tf);
    }
};

struct SgOutput {
    SgCtx c;
    template <class T>
    void operator()(const T* x, const T* u, T* out) const {
        const auto& p = c.p;
        T th = x[0], dw = x[1], eqp = x[2], psi1d = x[3], edp = x[4], psi2q = x[5];
        T id, iq;
        to_local(th, u[2] * T(c.scale), u[3] * T(c.scale), id, iq);
        T w = T(1.0) + dw;
        T psid = T(-p.xdpp) * id + T(c.k1) * eqp + T(c.k2) * psi1d;
        T psiq = T(-p.xqpp) * iq - T(c.k3) * edp + T(c.k4) * psi2q;
        T vd = T(-p.rs) * id - w * psiq;
        T vq = T(-p.rs) * iq + w * psid;
        to_global(th, vd, vq, out[0], out[1]);
    }
};

}  // namespace

StateSpaceBlock linearize_sg(const SgSpec& spec, const DeviceInit& init,
                             const PerUnitBase& base) {
    SgCtx c;
    c.p = spec.par;
    c.scale = base.s_base_mva / spec.s_nom_mva;
    c.wb = base.omega_base();
    const auto& p = c.p;
    c.k1 = (p.xdpp - p.xls) / (p.xdp - p.xls);
    c.k2 = (p.xdp - p.xdpp) / (p.xdp - p.xls);
    c.k3 = (p.xqpp - p.xls) / (p.xqp - p.xls);
    c.k4 = (p.xqp - p.xqpp) / (p.xqp - p.xls);
    c.gd = (p.xdp - p.xdpp) / ((p.xdp - p.xls) * (p.xdp - p.xls));
    c.gq = (p.xqp - p.xqpp) / ((p.xqp - p.xls) * (p.xqp - p.xls));

    // phasor construction of the equilibrium (machine pu, local frame)
    Complex v = init.v_bus;
    Complex i = init.i_inj * c.scale;
    double delta = std::arg(v + Complex(p.rs, p.xq) * i);
    double th0 = delta - M_PI / 2.0;  // d-axis lags the rotor q-axis by 90 deg
    Complex vl = v * std::polar(1.0, -th0);
    Complex il = i * std::polar(1.0, -th0);
    double vd = vl.real(), vq = vl.imag();
    double id = il.real(), iq = il.imag();
    double eqp = vq + p.rs * iq + p.xdp * id;
    double edp = vd + p.rs * id - p.xqp * iq;
    double psi1d = eqp - (p.xdp - p.xls) * id;
    double psi2q = -edp - (p.xqp - p.xls) * iq;
    double efd = eqp + (p.xd - p.xdp) * id;
    double psid = -p.xdpp * id + c.k1 * eqp + c.k2 * psi1d;
    double psiq = -p.xqpp * iq - c.k3 * edp + c.k4 * psi2q;
    double tm0 = psid * iq - psiq * id;
    double vr0 = p.Ke * efd;
    double vref0 = std::abs(v) + vr0 / p.Ka;
    double xf0 = (p.Kf / p.Tf) * efd;

    Vec x0(13), u0(4);
    x0 << th0, 0.0, eqp, psi1d, edp, psi2q, tm0, tm0, tm0, tm0, vr0, efd, xf0;
    u0 << tm0, vref0, init.i_inj.real(), init.i_inj.imag();

    auto b = make_block(
        "sg" + std::to_string(spec.bus), x0, u0, 2, SgResidual{c}, SgOutput{c},
        {{"p_ref", PortKind::Scalar, 1},
         {"v_ref", PortKind::Scalar, 1},
         {"i", PortKind::CurrentDq, 2}},
        {{"v", PortKind::VoltageDq, 2}},
        {"th", "dw", "eqp", "psi1d", "edp", "psi2q", "xg1", "xg2", "xt1", "xt2",
         "vr", "efd", "xf"});
    check_equilibrium(b);
    return b;
}

// ----------------------------------------------------------------- IBR

namespace {

struct IbrCtx {
    IbrParams p;
    int version;
    double scale;
    double wb;
    double tau_dc;
};

// states: th, xpll, icd, icq, vcd, vcq, gd, gq [, vdc, xdc]
// inputs: (p_ref | i_dc), q_ref, iD, iQ
struct IbrResidual {
    IbrCtx c;
    template <class T>
    void operator()(const T* x, const T* u, T* out) const {
        const auto& p = c.p;
        T th = x[0], xpll = x[1], icd = x[2], icq = x[3], vcd = x[4], vcq = x[5],
          gd = x[6], gq = x[7];
        T ref1 = u[0], qref = u[1];
        T igd, igq;
        to_local(th, u[2] * T(c.scale), u[3] * T(c.scale), igd, igq);
        T icap_d = icd - igd, icap_q = icq - igq;
        T vd = vcd + T(p.Rf) * icap_d;
        T vq = vcq + T(p.Rf) * icap_q;
        T dw = T(p.kp_pll) * vq + xpll;
        T w = T(1.0) + dw;
        T idref, iqref;
        if (c.version == 1) {
            T den = vd * vd + vq * vq;
            idref = (ref1 * vd + qref * vq) / den;
            iqref = (ref1 * vq - qref * vd) / den;
        } else {
            T vdc = x[8], xdc = x[9];
            T e = (c.version == 2) ? vdc - T(1.0) : vdc * vdc - T(1.0);
            double kp = (c.version == 2) ? p.kp_dc : p.kp_2dc;
            idref = T(kp) * e + xdc;
            iqref = (vq * idref - qref) / vd;
        }
        T ed = idref - icd, eq = iqref - icq;
        T vtd = T(p.kp_i) * ed + gd - T(p.L) * icq;
        T vtq = T(p.kp_i) * eq + gq + T(p.L) * icd;
        out[0] = T(c.wb) * dw;
        out[1] = T(p.ki_pll) * vq;
        out[2] = T(c.wb / p.L) * (vtd - vd - T(p.R) * icd + w * T(p.L) * icq);
        out[3] = T(c.wb / p.L) * (vtq - vq - T(p.R) * icq - w * T(p.L) * icd);
        out[4] = T(c.wb / p.Cf) * (icap_d + w * T(p.Cf) * vcq);
        out[5] = T(c.wb / p.Cf) * (icap_q - w * T(p.Cf) * vcd);
        out[6] = T(p.ki_i) * ed;
        out[7] = T(p.ki_i) * eq;
        if (c.version != 1) {
            T vdc = x[8];
            T e = (c.version == 2) ? vdc - T(1.0) : vdc * vdc - T(1.0);
            double ki = (c.version == 2) ? p.ki_dc : p.ki_2dc;
            T pac = vtd * icd + vtq * icq;
            out[8] = (ref1 - pac / vdc) / T(c.tau_dc);
            out[9] = T(ki) * e;
        }
    }
};

struct IbrOutput {
    IbrCtx c;
    template <class T>
    void operator()(const T* x, const T* u, T* out) const {
        T th = x[0], icd = x[2], icq = x[3], vcd = x[4], vcq = x[5];
        T igd, igq;
        to_local(th, u[2] * T(c.scale), u[3] * T(c.scale), igd, igq);
        T vd = vcd + T(c.p.Rf) * (icd - igd);
        T vq = vcq + T(c.p.Rf) * (icq - igq);
        to_global(th, vd, vq, out[0], out[1]);
    }
};

}  // namespace

StateSpaceBlock linearize_ibr(const IbrSpec& spec, const DeviceInit& init,
                              const PerUnitBase& base) {
    if (spec.version < 1 || spec.version > 3)
        throw SchemaError("ibr version must be 1..3");
    IbrCtx c;
    c.p = spec.par;
    c.version = spec.version;
    c.scale = base.s_base_mva / spec.s_nom_mva;
    c.wb = base.omega_base();
    c.tau_dc = spec.tau_dc();
    const auto& p = c.p;

    Complex v = init.v_bus;
    Complex ig = init.i_inj * c.scale;
    double th0 = std::arg(v);  // PLL aligns the local q-axis voltage to zero
    Complex vpcc = v * std::polar(1.0, -th0);
    Complex igl = ig * std::polar(1.0, -th0);
    Complex vc = vpcc / (1.0 + Complex(0, 1) * p.Rf * p.Cf);
    Complex ic = igl + Complex(0, 1) * p.Cf * vc;
    Complex vt = vpcc + Complex(p.R, p.L) * ic;
    double gd0 = vt.real() + p.L * ic.imag();
    double gq0 = vt.imag() - p.L * ic.real();

    double pref0 = vpcc.real() * ic.real() + vpcc.imag() * ic.imag();
    double qref0 = vpcc.imag() * ic.real() - vpcc.real() * ic.imag();
    double pac0 = vt.real() * ic.real() + vt.imag() * ic.imag();

    int n_x = (spec.version == 1) ? 8 : 10;
    Vec x0(n_x), u0(4);
    x0.head(8) << th0, 0.0, ic.real(), ic.imag(), vc.real(), vc.imag(), gd0, gq0;
    std::vector<std::string> names = {"th",  "xpll", "icd", "icq",
                                      "vcd", "vcq",  "gd",  "gq"};
    std::string ref1_name = "p_ref";
    if (spec.version == 1) {
        u0 << pref0, qref0, init.i_inj.real(), init.i_inj.imag();
    } else {
        x0[8] = 1.0;           // v_dc
        x0[9] = ic.real();     // dc loop integrator holds i_d reference
        names.push_back("vdc");
        names.push_back("xdc");
        ref1_name = "i_dc";    // dc-side current source, pu: I_dc = P_ac/v_dc
        u0 << pac0, qref0, init.i_inj.real(), init.i_inj.imag();
    }

    auto b = make_block(
        "ibr" + std::to_string(spec.bus), x0, u0, 2, IbrResidual{c}, IbrOutput{c},
        {{ref1_name, PortKind::Scalar, 1},
         {"q_ref", PortKind::Scalar, 1},
         {"i", PortKind::CurrentDq, 2}},
        {{"v", PortKind::VoltageDq, 2}}, names);
    check_equilibrium(b);
    return b;
}

// ------------------------------------------------------ passive blocks

namespace {

// series RL, input (vad, vaq, vbd, vbq) -> output current a->b
struct RlResidual {
    double r, x, wb;
    template <class T>
    void operator()(const T* s, const T* u, T* out) const {
        out[0] = T(wb / x) * (u[0] - u[2] - T(r) * s[0] + T(x) * s[1]);
        out[1] = T(wb / x) * (u[1] - u[3] - T(r) * s[1] - T(x) * s[0]);
    }
};
struct StateCopy2 {
    template <class T>
    void operator()(const T* s, const T*, T* out) const {
        out[0] = s[0];
        out[1] = s[1];
    }
};

struct CapResidual {
    double b, wb;
    template <class T>
    void operator()(const T* s, const T* u, T* out) const {
        out[0] = T(wb / b) * (u[0] + T(b) * s[1]);
        out[1] = T(wb / b) * (u[1] - T(b) * s[0]);
    }
};

// one-side RL (voltage input only), used by loads
struct LoadResidual {
    double r, x, wb;
    template <class T>
    void operator()(const T* s, const T* u, T* out) const {
        out[0] = T(wb / x) * (u[0] - T(r) * s[0] + T(x) * s[1]);
        out[1] = T(wb / x) * (u[1] - T(r) * s[1] - T(x) * s[0]);
    }
};

// purely resistive load (Q = 0): static, no states
struct NoStates {
    template <class T>
    void operator()(const T*, const T*, T*) const {}
};
struct ResistiveOutput {
    double g;  // 1/r
    template <class T>
    void operator()(const T*, const T* u, T* out) const {
        out[0] = u[0] * T(g);
        out[1] = u[1] * T(g);
    }
};

// T-circuit transformer in device pu; u holds the port voltages (identical
// in device and system pu), states i1/i2/im are device-pu currents, and the
// magnetizing node voltage follows from KCL through the core-loss
// resistance: vm = r_fe (i1 + i2 - im).
struct XfmrResidual {
    double r1, x1, rfe, xm, wb;
    template <class T>
    void operator()(const T* s, const T* u, T* out) const {
        T vmd = T(rfe) * (s[0] + s[2] - s[4]);
        T vmq = T(rfe) * (s[1] + s[3] - s[5]);
        out[0] = T(wb / x1) * (u[0] - vmd - T(r1) * s[0] + T(x1) * s[1]);
        out[1] = T(wb / x1) * (u[1] - vmq - T(r1) * s[1] - T(x1) * s[0]);
        out[2] = T(wb / x1) * (u[2] - vmd - T(r1) * s[2] + T(x1) * s[3]);
        out[3] = T(wb / x1) * (u[3] - vmq - T(r1) * s[3] - T(x1) * s[2]);
        out[4] = T(wb / xm) * (vmd + T(xm) * s[5]);
        out[5] = T(wb / xm) * (vmq - T(xm) * s[4]);
    }
};
struct XfmrOutput {
    double inv_sc;  // device pu current -> system pu
    template <class T>
    void operator()(const T* s, const T*, T* out) const {
        out[0] = s[0] * T(inv_sc);
        out[1] = s[1] * T(inv_sc);
        out[2] = s[2] * T(inv_sc);
        out[3] = s[3] * T(inv_sc);
    }
};

}  // namespace

StateSpaceBlock transformer_block(const TransformerSpec& spec,
                                  const PerUnitBase& base) {
    if (spec.s_nom_mva <= 0) throw SchemaError("transformer s_nom must be positive");
    XfmrResidual fr{spec.r_w / 2.0, spec.x_w / 2.0, spec.r_fe, spec.x_m,
                    base.omega_base()};
    XfmrOutput gr{spec.s_nom_mva / base.s_base_mva};
    return make_block(
        "xfmr" + std::to_string(spec.from) + "-" + std::to_string(spec.to),
        Vec::Zero(6), Vec::Zero(4), 4, fr, gr,
        {{"v1", PortKind::VoltageDq, 2}, {"v2", PortKind::VoltageDq, 2}},
        {{"i1", PortKind::CurrentDq, 2}, {"i2", PortKind::CurrentDq, 2}},
        {"i1d", "i1q", "i2d", "i2q", "imd", "imq"});
}

LineBlocks line_blocks(const BranchSpec& spec, const PerUnitBase& base) {
    if (spec.x == 0) throw SchemaError("line reactance must be nonzero");
    LineBlocks out;
    std::string tag = std::to_string(spec.from) + "-" + std::to_string(spec.to);
    out.rl = make_block("line" + tag, Vec::Zero(2), Vec::Zero(4), 2,
                        RlResidual{spec.r, spec.x, base.omega_base()}, StateCopy2{},
                        {{"va", PortKind::VoltageDq, 2}, {"vb", PortKind::VoltageDq, 2}},
                        {{"i", PortKind::CurrentDq, 2}}, {"id", "iq"});
    if (spec.b_shunt > 0) {
        out.shunt_from = shunt_block("shunt" + tag + "a", spec.b_shunt / 2.0, base);
        out.shunt_to = shunt_block("shunt" + tag + "b", spec.b_shunt / 2.0, base);
    }
    return out;
}

StateSpaceBlock shunt_block(const std::string& label, double b_pu,
                            const PerUnitBase& base) {
    if (b_pu <= 0) throw SchemaError(label + ": shunt susceptance must be positive");
    return make_block(label, Vec::Zero(2), Vec::Zero(2), 2,
                      CapResidual{b_pu, base.omega_base()}, StateCopy2{},
                      {{"i", PortKind::CurrentDq, 2}},
                      {{"v", PortKind::VoltageDq, 2}}, {"vd", "vq"});
}

StateSpaceBlock load_block(const LoadSpec& spec, Complex v_bus,
                           const PerUnitBase& base) {
    if (spec.p_mw <= 0) throw SchemaError("load P must be positive");
    if (spec.q_mvar < 0)
        throw SchemaError("capacitive load Q is outside the series-RL model class");
    Complex s = Complex(spec.p_mw, spec.q_mvar) / base.s_base_mva;
    Complex z = std::norm(v_bus) * s / std::norm(s);
    std::string label = "load" + std::to_string(spec.bus);
    if (spec.q_mvar == 0)
        return make_block(label, Vec::Zero(0), Vec::Zero(2), 2, NoStates{},
                          ResistiveOutput{1.0 / z.real()},
                          {{"v", PortKind::VoltageDq, 2}},
                          {{"i", PortKind::CurrentDq, 2}}, {});
    return make_block(label, Vec::Zero(2), Vec::Zero(2), 2,
                      LoadResidual{z.real(), z.imag(), base.omega_base()},
                      StateCopy2{}, {{"v", PortKind::VoltageDq, 2}},
                      {{"i", PortKind::CurrentDq, 2}}, {"id", "iq"});
}

std::pair<double, double> modulus_optimum_gains(const IbrSpec& spec, double tau_s) {
    // L is pu on the control base; the SI plant inductance is L/omega_base,
    // and dividing by tau gives a gain already in pu of the control base.
    PerUnitBase base;
    double kp = (spec.par.L / base.omega_base()) / tau_s;
    double ki = spec.par.R / tau_s;
    return {kp, ki};
}

}  // namespace ssw
