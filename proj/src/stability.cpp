#include "ssw/stability.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "ssw/loadflow.hpp"

namespace ssw {

EigenReport eigenvalues(const AssembledSystem& sys) {
    if (!sys.a_ps.allFinite())
        throw NumericalError("A_ps contains non-finite entries");
    Eigen::EigenSolver<Mat> es(sys.a_ps, /*computeEigenvectors=*/true);
    if (es.info() != Eigen::Success)
        throw NumericalError("eigensolver did not converge");

    EigenReport rep;
    const auto& lam = es.eigenvalues();
    const MatC right = es.eigenvectors();
    // left eigenvectors are the rows of the inverse of the right-vector matrix
    MatC left = right.partialPivLu().solve(MatC::Identity(lam.size(), lam.size()));

    for (Eigen::Index k = 0; k < lam.size(); ++k) {
        rep.eigenvalues.push_back(lam[k]);
        Mode m;
        m.lambda = lam[k];
        m.freq_hz = std::abs(lam[k].imag()) / (2.0 * M_PI);
        double mag = std::abs(lam[k]);
        m.damping = mag > 0 ? -lam[k].real() / mag : 1.0;
        // participation p_ik = |left_ki * right_ik|, normalized per mode
        Eigen::VectorXd part(lam.size());
        for (Eigen::Index i = 0; i < lam.size(); ++i)
            part[i] = std::abs(left(k, i) * right(i, k));
        double total = part.sum();
        if (total > 0) part /= total;
        std::vector<int> order(lam.size());
        for (Eigen::Index i = 0; i < lam.size(); ++i) order[i] = static_cast<int>(i);
        std::partial_sort(order.begin(), order.begin() + std::min<std::size_t>(3, order.size()),
                          order.end(),
                          [&](int a, int b) { return part[a] > part[b]; });
        for (std::size_t j = 0; j < std::min<std::size_t>(3, order.size()); ++j) {
            const auto& lbl = sys.state_labels[order[j]];
            m.dominant.emplace_back(lbl.first + "." + lbl.second, part[order[j]]);
        }
        rep.modes.push_back(std::move(m));
    }
    return rep;
}

bool spectrum_stable(const std::vector<Complex>& lam, double eps) {
    // deflate at most one structural zero (|lambda| < eps); any other
    // eigenvalue with nonnegative real part means unstable
    int zero_modes = 0;
    for (const auto& z : lam)
        if (std::abs(z) < eps) ++zero_modes;
    if (zero_modes > 1) return false;  // more than reference-frame redundancy
    for (const auto& z : lam) {
        if (std::abs(z) < eps) continue;
        if (z.real() >= 0) return false;
    }
    return true;
}

bool is_stable(const AssembledSystem& sys, double eps) {
    if (!sys.a_ps.allFinite())
        throw NumericalError("A_ps contains non-finite entries");
    Eigen::EigenSolver<Mat> es(sys.a_ps, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw NumericalError("eigensolver did not converge");
    std::vector<Complex> lam(es.eigenvalues().data(),
                             es.eigenvalues().data() + es.eigenvalues().size());
    return spectrum_stable(lam, eps);
}

namespace {

IbrSpec make_ibr(const SweepContext& ctx, const std::vector<double>& rho,
                 const std::vector<std::string>& rho_names) {
    IbrSpec ibr;
    ibr.version = ctx.ibr_version;
    auto set = [&](const std::string& name, double v) {
        if (name == "kp_pll") ibr.par.kp_pll = v;
        else if (name == "ki_pll") ibr.par.ki_pll = v;
        else if (name == "kp_i") ibr.par.kp_i = v;
        else if (name == "ki_i") ibr.par.ki_i = v;
        else if (name == "kp_dc") ibr.par.kp_dc = v;
        else if (name == "ki_dc") ibr.par.ki_dc = v;
        else if (name == "kp_2dc") ibr.par.kp_2dc = v;
        else if (name == "ki_2dc") ibr.par.ki_2dc = v;
        else throw SchemaError("unknown IBR gain '" + name + "'");
    };
    for (const auto& [name, v] : ctx.fixed_gains) set(name, v);
    if (rho.size() != rho_names.size())
        throw SchemaError("rho and rho_names size mismatch");
    for (std::size_t j = 0; j < rho.size(); ++j) set(rho_names[j], rho[j]);
    return ibr;
}

}  // namespace

StabilityVerdict is_ps_stable(const std::vector<double>& rho,
                              const std::vector<std::string>& rho_names,
                              const SweepContext& ctx) {
    StabilityVerdict verdict;
    verdict.stable = true;
    verdict.worst_re = -std::numeric_limits<double>::infinity();
    IbrSpec ibr_proto = make_ibr(ctx, rho, rho_names);

    for (int sc : ctx.scenario_ids) {
        NetworkModel net = apply_scenario(ctx.net, sc);
        net = replace_sg_with_ibr(net, ctx.ibr_bus, ibr_proto);
        LoadflowResult sol;
        try {
            sol = solve_newton_raphson(net);
        } catch (const InfeasibleError&) {
            verdict.infeasible = true;
            verdict.stable = false;
            verdict.failing_scenarios.push_back(sc);
            continue;
        }
        InitialStateSet init = init_dynamic_states(net, sol);

        std::vector<Complex> lam;
        if (ctx.rep == GridRep::Full) {
            AssembledSystem sys = assemble_full_grid(net, init, sol);
            Eigen::EigenSolver<Mat> es(sys.a_ps, false);
            if (es.info() != Eigen::Success)
                throw NumericalError("eigensolver did not converge");
            lam.assign(es.eigenvalues().data(),
                       es.eigenvalues().data() + es.eigenvalues().size());
        } else {
            bool with_loads = ctx.rep == GridRep::TheveninLoads;
            TheveninEquivalent eq =
                compute_thevenin(net, ctx.ibr_bus, with_loads, sol);
            const DeviceInit& di = init.at_bus(ctx.ibr_bus);
            const IbrSpec* spec = nullptr;
            for (const auto& b : net.ibrs)
                if (b.bus == ctx.ibr_bus) spec = &b;
            StateSpaceBlock dev = linearize_ibr(*spec, di, net.base);
            StateSpaceBlock grid =
                thevenin_grid_block(eq, net.base, di.v_bus, di.i_inj);
            ConnectionGraph g;
            g.wires.push_back({{dev.label, "v"}, {"thevenin", "v"}, 1.0});
            g.wires.push_back({{"thevenin", "i"}, {dev.label, "i"}, 1.0});
            AssembledSystem sys = connect({dev, grid}, g);
            Eigen::EigenSolver<Mat> es(sys.a_ps, false);
            if (es.info() != Eigen::Success)
                throw NumericalError("eigensolver did not converge");
            lam.assign(es.eigenvalues().data(),
                       es.eigenvalues().data() + es.eigenvalues().size());
        }
        double worst = -std::numeric_limits<double>::infinity();
        for (const auto& z : lam)
            if (std::abs(z) >= 1e-8) worst = std::max(worst, z.real());
        verdict.worst_re = std::max(verdict.worst_re, worst);
        if (!spectrum_stable(lam)) {
            verdict.stable = false;
            verdict.failing_scenarios.push_back(sc);
        }
    }
    return verdict;
}

}  // namespace ssw
