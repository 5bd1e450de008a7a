#include "ssw/loadflow.hpp"

#include <cmath>

namespace ssw {

MatC build_ybus(const NetworkModel& net, const YbusOptions& opt) {
    const auto n = static_cast<Eigen::Index>(net.n_bus());
    MatC y = MatC::Zero(n, n);
    for (const auto& br : net.branches) {
        int i = net.bus_index(br.from), j = net.bus_index(br.to);
        Complex ys = 1.0 / Complex(br.r, br.x);
        Complex ysh = opt.include_charging ? Complex(0, br.b_shunt / 2.0) : Complex(0, 0);
        y(i, i) += ys + ysh;
        y(j, j) += ys + ysh;
        y(i, j) -= ys;
        y(j, i) -= ys;
    }
    for (const auto& t : net.transformers) {
        int i = net.bus_index(t.from), j = net.bus_index(t.to);
        // series winding impedance on the system base; the magnetizing
        // branch is negligible for steady-state studies
        Complex ys = 1.0 / (Complex(t.r_w, t.x_w) * net.base.s_base_mva / t.s_nom_mva);
        y(i, i) += ys;
        y(j, j) += ys;
        y(i, j) -= ys;
        y(j, i) -= ys;
    }
    if (opt.include_charging) {
        for (const auto& s : net.shunts)
            y(net.bus_index(s.bus), net.bus_index(s.bus)) +=
                Complex(0, s.q_mvar / net.base.s_base_mva);
    }
    if (opt.include_loads) {
        // loads folded as constant admittances at V = 1 pu nominal
        for (const auto& l : net.loads)
            y(net.bus_index(l.bus), net.bus_index(l.bus)) +=
                Complex(l.p_mw, -l.q_mvar) / net.base.s_base_mva;
    }
    return y;
}

LoadflowResult solve_newton_raphson(const NetworkModel& net,
                                    const LoadflowOptions& opt) {
    const int n = static_cast<int>(net.n_bus());
    YbusOptions yopt;
    yopt.include_loads = false;  // loads enter as constant-power injections
    yopt.include_charging = true;
    MatC y = build_ybus(net, yopt);

    Eigen::VectorXd p_set = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd q_set = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd v_set = Eigen::VectorXd::Ones(n);
    std::vector<BusKind> kind(n, BusKind::Pq);

    for (const auto& b : net.buses) kind[net.bus_index(b.id)] = b.kind;
    auto apply_machine = [&](int bus, double v0, double p0_mw) {
        int i = net.bus_index(bus);
        v_set[i] = v0;
        p_set[i] += p0_mw / net.base.s_base_mva;
        if (kind[i] == BusKind::Pq) kind[i] = BusKind::Pv;
    };
    for (const auto& g : net.generators) apply_machine(g.bus, g.v0, g.p0_mw);
    for (const auto& b : net.ibrs) apply_machine(b.bus, b.v0, b.p0_mw);
    for (const auto& l : net.loads) {
        int i = net.bus_index(l.bus);
        p_set[i] -= l.p_mw / net.base.s_base_mva;
        q_set[i] -= l.q_mvar / net.base.s_base_mva;
    }

    std::vector<int> pv, pq;
    int slack = -1;
    for (int i = 0; i < n; ++i) {
        if (kind[i] == BusKind::Slack) slack = i;
        else if (kind[i] == BusKind::Pv) pv.push_back(i);
        else pq.push_back(i);
    }
    std::vector<int> ang;  // ordering of the angle unknowns
    ang.insert(ang.end(), pv.begin(), pv.end());
    ang.insert(ang.end(), pq.begin(), pq.end());
    const int na = static_cast<int>(ang.size());
    const int nq = static_cast<int>(pq.size());

    // flat start: angles 0, PQ magnitudes 1, PV/slack at set point
    Eigen::VectorXd th = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd vm = Eigen::VectorXd::Ones(n);
    vm[slack] = v_set[slack];
    for (int i : pv) vm[i] = v_set[i];

    auto voltages = [&]() {
        VecC v(n);
        for (int i = 0; i < n; ++i) v[i] = std::polar(vm[i], th[i]);
        return v;
    };
    auto mismatch = [&](const VecC& v) {
        VecC s = v.array() * (y * v).conjugate().array();
        Eigen::VectorXd mis(na + nq);
        for (int k = 0; k < na; ++k) mis[k] = p_set[ang[k]] - s[ang[k]].real();
        for (int k = 0; k < nq; ++k) mis[na + k] = q_set[pq[k]] - s[pq[k]].imag();
        return mis;
    };

    LoadflowResult res;
    for (int it = 0; it <= opt.max_iter; ++it) {
        VecC v = voltages();
        Eigen::VectorXd mis = mismatch(v);
        double worst = mis.cwiseAbs().maxCoeff();
        if (!std::isfinite(worst))
            throw NumericalError("load flow produced non-finite mismatch");
        if (worst < opt.tol) {
            res.v = v;
            res.iterations = it;
            res.max_mismatch = worst;
            VecC s = v.array() * (y * v).conjugate().array();
            res.slack_injection = s[slack];
            return res;
        }
        if (it == opt.max_iter) break;

        // complex power Jacobian, dS/dtheta and dS/d|V|
        VecC i_inj = y * v;
        MatC a(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                a(r, c) = v[r] * std::conj(y(r, c)) * std::conj(v[c]);
        MatC ds_dt = Complex(0, 1) *
                     (MatC((v.array() * i_inj.conjugate().array()).matrix().asDiagonal()) - a);
        MatC ds_dv = MatC(VecC(v.array() / vm.array().cast<Complex>() *
                                i_inj.conjugate().array())
                              .asDiagonal());
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) ds_dv(r, c) += a(r, c) / vm[c];

        Eigen::MatrixXd jac(na + nq, na + nq);
        for (int r = 0; r < na; ++r) {
            for (int c = 0; c < na; ++c) jac(r, c) = -ds_dt(ang[r], ang[c]).real();
            for (int c = 0; c < nq; ++c) jac(r, na + c) = -ds_dv(ang[r], pq[c]).real();
        }
        for (int r = 0; r < nq; ++r) {
            for (int c = 0; c < na; ++c) jac(na + r, c) = -ds_dt(pq[r], ang[c]).imag();
            for (int c = 0; c < nq; ++c) jac(na + r, na + c) = -ds_dv(pq[r], pq[c]).imag();
        }
        Eigen::VectorXd dx = jac.partialPivLu().solve(-mis);
        double step = dx.cwiseAbs().maxCoeff();
        double lam = step > 0.5 ? 0.5 / step : 1.0;  // damp very large steps
        for (int k = 0; k < na; ++k) th[ang[k]] += lam * dx[k];
        for (int k = 0; k < nq; ++k) vm[pq[k]] += lam * dx[na + k];
    }
    throw InfeasibleError("load flow did not converge in " +
                          std::to_string(opt.max_iter) + " iterations");
}

const DeviceInit& InitialStateSet::at_bus(int bus) const {
    for (const auto& e : entries)
        if (e.bus == bus) return e;
    throw SchemaError("no dynamic device at bus " + std::to_string(bus));
}

InitialStateSet init_dynamic_states(const NetworkModel& net,
                                    const LoadflowResult& lf) {
    YbusOptions yopt;
    yopt.include_loads = false;
    yopt.include_charging = true;
    MatC y = build_ybus(net, yopt);
    VecC s = lf.v.array() * (y * lf.v).conjugate().array();

    InitialStateSet init;
    auto add = [&](int bus) {
        DeviceInit d;
        d.bus = bus;
        int i = net.bus_index(bus);
        d.v_bus = lf.v[i];
        d.s_inj = s[i];
        d.i_inj = std::conj(d.s_inj / d.v_bus);
        init.entries.push_back(d);
    };
    for (const auto& g : net.generators) add(g.bus);
    for (const auto& b : net.ibrs) add(b.bus);
    return init;
}

}  // namespace ssw
