// Acceptance gate: one line per criterion, nonzero exit when any fails.
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ssw/adaptive.hpp"
#include "ssw/assembly.hpp"
#include "ssw/loadflow.hpp"
#include "ssw/manifest.hpp"
#include "ssw/netmodel.hpp"
#include "ssw/rng.hpp"
#include "ssw/stability.hpp"
#include "ssw/thevenin.hpp"

using namespace ssw;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int id, bool ok, const std::string& detail) {
    std::printf("%s: criterion %d - %s\n", ok ? "PASS" : "FAIL", id,
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

std::string net_path() { return std::string(SSW_DATA_DIR) + "/cigre_hv.net"; }

// ------------------------------------------------------------- criterion 1

struct TableVRow {
    int scenario;
    bool loads;
    double s_sc, scr, xr, v_th;
};

const TableVRow kTableV[] = {
    {1, true, 822, 2.34, 2.85, 0.8201},  {2, true, 758, 2.16, 2.51, 0.8259},
    {3, true, 816, 2.33, 2.74, 0.7984},  {4, true, 819, 2.34, 2.80, 0.8068},
    {1, false, 692, 1.98, 7.26, 1.0596}, {2, false, 617, 1.76, 7.52, 0.9348},
    {3, false, 676, 1.93, 7.39, 1.0855}, {4, false, 685, 1.95, 7.35, 1.0788},
};

void criterion_1() {
    auto t0 = Clock::now();
    auto net = load_network(net_path());
    bool ok = true;
    std::ostringstream detail;
    for (const auto& row : kTableV) {
        auto scn = apply_scenario(net, row.scenario);
        auto sol = solve_newton_raphson(scn);
        auto eq = compute_thevenin(scn, 10, row.loads, sol);
        bool r = std::abs(eq.scr - row.scr) <= 0.1 &&
                 std::abs(eq.xr - row.xr) <= 0.3 &&
                 std::abs(eq.v_th - row.v_th) <= 0.02 &&
                 std::abs(eq.scr - eq.s_sc_mva / 350.0) <= 0.005;
        if (!r) {
            ok = false;
            detail << " [sc" << row.scenario << (row.loads ? "/loads" : "/cables")
                   << " scr=" << eq.scr << " xr=" << eq.xr << " vth=" << eq.v_th
                   << "]";
        }
    }
    double dt = seconds_since(t0);
    ok = ok && dt < 5.0;
    std::ostringstream msg;
    msg << "Table V Thevenin report, 8 rows in " << dt << " s" << detail.str();
    report(1, ok, msg.str());
}

// ------------------------------------------------------------- criterion 2

DeviceInit random_equilibrium(Rng& rng, double s_nom, const PerUnitBase& base) {
    DeviceInit d;
    d.bus = 1;
    d.v_bus = std::polar(0.95 + 0.10 * rng.uniform(),
                         (rng.uniform() - 0.5) * 1.0471975511965976);
    double p = (0.1 + 0.8 * rng.uniform()) * s_nom / base.s_base_mva;
    double q = (-0.3 + 0.7 * rng.uniform()) * s_nom / base.s_base_mva;
    d.s_inj = Complex(p, q);
    d.i_inj = std::conj(d.s_inj / d.v_bus);
    return d;
}

double fd_worst_rel_err(const StateSpaceBlock& b, double h) {
    auto rel = [](const Mat& fd, const Mat& exact) {
        double s = std::max(1.0, exact.cwiseAbs().maxCoeff());
        return (fd - exact).cwiseAbs().maxCoeff() / s;
    };
    Mat a(b.n_x(), b.n_x()), bm(b.n_x(), b.n_u());
    Mat c(b.n_y(), b.n_x()), d(b.n_y(), b.n_u());
    for (int j = 0; j < b.n_x(); ++j) {
        Vec xp = b.x0, xm = b.x0;
        xp[j] += h;
        xm[j] -= h;
        a.col(j) = (b.f(xp, b.u0) - b.f(xm, b.u0)) / (2 * h);
        c.col(j) = (b.g(xp, b.u0) - b.g(xm, b.u0)) / (2 * h);
    }
    for (int j = 0; j < b.n_u(); ++j) {
        Vec up = b.u0, um = b.u0;
        up[j] += h;
        um[j] -= h;
        bm.col(j) = (b.f(b.x0, up) - b.f(b.x0, um)) / (2 * h);
        d.col(j) = (b.g(b.x0, up) - b.g(b.x0, um)) / (2 * h);
    }
    return std::max(std::max(rel(a, b.A), rel(bm, b.B)),
                    std::max(rel(c, b.C), rel(d, b.D)));
}

void criterion_2() {
    auto t0 = Clock::now();
    PerUnitBase base;
    double worst = 0.0;
    Rng rng(2024);
    SgSpec g;
    g.s_nom_mva = 500.0;
    for (int k = 0; k < 20; ++k) {
        auto init = random_equilibrium(rng, g.s_nom_mva, base);
        worst = std::max(worst, fd_worst_rel_err(linearize_sg(g, init, base), 1e-6));
    }
    for (int version = 1; version <= 3; ++version) {
        IbrSpec spec;
        spec.version = version;
        for (int k = 0; k < 20; ++k) {
            auto init = random_equilibrium(rng, spec.s_nom_mva, base);
            worst = std::max(worst,
                             fd_worst_rel_err(linearize_ibr(spec, init, base), 1e-6));
        }
    }
    double dt = seconds_since(t0);
    bool ok = worst <= 1e-5 && dt < 30.0;
    std::ostringstream msg;
    msg << "finite-difference Jacobian check, worst rel err " << worst << " in "
        << dt << " s";
    report(2, ok, msg.str());
}

// ------------------------------------------------------------- criterion 3

using MatC = Eigen::MatrixXcd;

StateSpaceBlock random_block(Rng& rng, const std::string& label, int n_in,
                             int n_out, bool feedthrough) {
    int n_x = 1 + static_cast<int>(rng.uniform() * 3.0);
    if (n_x > 3) n_x = 3;
    StateSpaceBlock b;
    b.label = label;
    b.A = Mat::NullaryExpr(n_x, n_x, [&]() { return 2 * rng.uniform() - 1; });
    b.A -= 3.0 * Mat::Identity(n_x, n_x);
    b.B = Mat::NullaryExpr(n_x, n_in, [&]() { return 2 * rng.uniform() - 1; });
    b.C = Mat::NullaryExpr(n_out, n_x, [&]() { return 2 * rng.uniform() - 1; });
    b.D = Mat::Zero(n_out, n_in);
    if (feedthrough)
        b.D = Mat::NullaryExpr(n_out, n_in,
                               [&]() { return 0.2 * (2 * rng.uniform() - 1); });
    b.x0 = Vec::Zero(n_x);
    b.u0 = Vec::Zero(n_in);
    for (int k = 0; k < n_in; ++k)
        b.in_ports.push_back({"u" + std::to_string(k), PortKind::Scalar, 1});
    for (int k = 0; k < n_out; ++k)
        b.out_ports.push_back({"y" + std::to_string(k), PortKind::Scalar, 1});
    for (int k = 0; k < n_x; ++k)
        b.state_names.push_back("x" + std::to_string(k));
    return b;
}

struct RandomGraph {
    std::vector<StateSpaceBlock> blocks;
    ConnectionGraph graph;
};

RandomGraph random_graph(Rng& rng) {
    RandomGraph g;
    int n_blocks = 2 + static_cast<int>(rng.uniform() * 5.0);
    if (n_blocks > 6) n_blocks = 6;
    for (int k = 0; k < n_blocks; ++k)
        g.blocks.push_back(random_block(rng, "b" + std::to_string(k),
                                        1 + (rng.uniform() < 0.5 ? 1 : 0),
                                        1 + (rng.uniform() < 0.5 ? 1 : 0),
                                        rng.uniform() < 0.5));
    bool have_in = false;
    for (int k = 0; k < n_blocks; ++k)
        for (const auto& ip : g.blocks[k].in_ports) {
            PortRef to{g.blocks[k].label, ip.name};
            if (!have_in || rng.uniform() < 0.3) {
                g.graph.external_in.push_back(to);
                have_in = true;
            } else {
                int src = static_cast<int>(rng.uniform() * n_blocks) % n_blocks;
                const auto& outs = g.blocks[src].out_ports;
                int op = static_cast<int>(rng.uniform() * outs.size()) %
                         static_cast<int>(outs.size());
                g.graph.wires.push_back({{g.blocks[src].label, outs[op].name},
                                         to,
                                         rng.uniform() < 0.5 ? 1.0 : -1.0});
            }
        }
    for (const auto& p : g.blocks.back().out_ports)
        g.graph.external_out.push_back({g.blocks.back().label, p.name});
    return g;
}

MatC freq_response(const RandomGraph& g, Complex s) {
    int n_u = 0, n_y = 0;
    std::vector<int> uoff, yoff;
    for (const auto& b : g.blocks) {
        uoff.push_back(n_u);
        yoff.push_back(n_y);
        n_u += b.n_u();
        n_y += b.n_y();
    }
    MatC gall = MatC::Zero(n_y, n_u);
    for (std::size_t k = 0; k < g.blocks.size(); ++k) {
        const auto& b = g.blocks[k];
        MatC res = (MatC::Identity(b.n_x(), b.n_x()) * s - b.A.cast<Complex>())
                       .partialPivLu()
                       .solve(b.B.cast<Complex>());
        gall.block(yoff[k], uoff[k], b.n_y(), b.n_u()) =
            b.C.cast<Complex>() * res + b.D.cast<Complex>();
    }
    auto block_of = [&](const std::string& label) {
        for (std::size_t k = 0; k < g.blocks.size(); ++k)
            if (g.blocks[k].label == label) return static_cast<int>(k);
        return -1;
    };
    auto u_index = [&](const PortRef& p) {
        int k = block_of(p.block);
        for (std::size_t j = 0; j < g.blocks[k].in_ports.size(); ++j)
            if (g.blocks[k].in_ports[j].name == p.port)
                return uoff[k] + static_cast<int>(j);
        return -1;
    };
    auto y_index = [&](const PortRef& p) {
        int k = block_of(p.block);
        for (std::size_t j = 0; j < g.blocks[k].out_ports.size(); ++j)
            if (g.blocks[k].out_ports[j].name == p.port)
                return yoff[k] + static_cast<int>(j);
        return -1;
    };
    Mat kmat = Mat::Zero(n_u, n_y);
    for (const auto& w : g.graph.wires)
        kmat(u_index(w.to), y_index(w.from)) = w.sign;
    Mat pmat = Mat::Zero(n_u, static_cast<int>(g.graph.external_in.size()));
    for (std::size_t j = 0; j < g.graph.external_in.size(); ++j)
        pmat(u_index(g.graph.external_in[j]), static_cast<int>(j)) = 1.0;
    Mat smat = Mat::Zero(static_cast<int>(g.graph.external_out.size()), n_y);
    for (std::size_t i = 0; i < g.graph.external_out.size(); ++i)
        smat(static_cast<int>(i), y_index(g.graph.external_out[i])) = 1.0;
    MatC loop = MatC::Identity(n_y, n_y) - gall * kmat.cast<Complex>();
    return smat.cast<Complex>() *
           loop.partialPivLu().solve(gall * pmat.cast<Complex>());
}

void criterion_3() {
    Rng rng(4242);
    int tested = 0;
    double worst = 0.0;
    while (tested < 200) {
        auto g = random_graph(rng);
        AssembledSystem sys;
        try {
            sys = connect(g.blocks, g.graph);
        } catch (const NumericalError&) {
            continue;
        }
        ++tested;
        Rng wrng(1000 + tested);
        for (int k = 0; k < 20; ++k) {
            Complex s(0.0, 0.2 + 50.0 * wrng.uniform());
            int n = static_cast<int>(sys.a_ps.rows());
            MatC res = (MatC::Identity(n, n) * s - sys.a_ps.cast<Complex>())
                           .partialPivLu()
                           .solve(sys.b.cast<Complex>());
            MatC direct = sys.c.cast<Complex>() * res + sys.d.cast<Complex>();
            worst = std::max(
                worst, (freq_response(g, s) - direct).cwiseAbs().maxCoeff());
        }
    }
    std::ostringstream msg;
    msg << "200 random interconnections vs frequency-domain elimination, "
           "worst dev "
        << worst;
    report(3, worst <= 1e-9, msg.str());
}

// ------------------------------------------------------------- criterion 4

void criterion_4() {
    // two-bus closed form
    NetworkModel tb;
    tb.schema_version = 1;
    tb.buses = {{1, 220.0, BusKind::Slack}, {2, 220.0, BusKind::Pq}};
    tb.branches = {{1, 2, 0.02, 0.12, 0.0}};
    tb.loads = {{2, 80.0, 30.0}};
    auto sol2 = solve_newton_raphson(tb);
    double bq = 2.0 * (0.8 * 0.02 + 0.3 * 0.12) - 1.0;
    double cq = (0.8 * 0.8 + 0.3 * 0.3) * (0.02 * 0.02 + 0.12 * 0.12);
    double vm = std::sqrt((-bq + std::sqrt(bq * bq - 4 * cq)) / 2.0);
    bool two_bus_ok = std::abs(std::abs(sol2.v[1]) - vm) < 1e-10;

    auto net = load_network(net_path());
    bool cigre_ok = true;
    double slack_mw = 0.0;
    for (const auto& s : net.scenarios) {
        auto scn = apply_scenario(net, s.id);
        auto sol = solve_newton_raphson(scn);
        cigre_ok = cigre_ok && sol.iterations <= 20 && sol.max_mismatch <= 1e-8;
        if (s.id == 1) slack_mw = sol.slack_injection.real() * net.base.s_base_mva;
    }
    bool slack_ok = std::abs(slack_mw - 503.0) <= 0.05 * 503.0;
    std::ostringstream msg;
    msg << "load flow: two-bus closed form, benchmark convergence, sc1 slack "
        << slack_mw << " MW";
    report(4, two_bus_ok && cigre_ok && slack_ok, msg.str());
}

// ------------------------------------------------------------- criterion 5

const std::vector<std::string> kGainNames = {"kp_pll", "ki_pll", "kp_i", "ki_i"};
const std::vector<double> kRhoStar = {0.77, 376.0, 0.64, 48.0};

SweepContext make_ctx(const NetworkModel& net, GridRep rep, int version = 1) {
    SweepContext ctx;
    ctx.net = net;
    for (const auto& s : net.scenarios) ctx.scenario_ids.push_back(s.id);
    ctx.rep = rep;
    ctx.ibr_version = version;
    return ctx;
}

void criterion_5() {
    auto t0 = Clock::now();
    auto net = load_network(net_path());
    bool ok = true;
    std::ostringstream detail;
    for (auto rep : {GridRep::Full, GridRep::TheveninLoads,
                     GridRep::TheveninNoLoads}) {
        auto v = is_ps_stable(kRhoStar, kGainNames, make_ctx(net, rep));
        if (!(v.stable && !v.infeasible)) {
            ok = false;
            detail << " [rep " << static_cast<int>(rep) << " worst_re "
                   << v.worst_re << "]";
        }
    }
    double dt = seconds_since(t0);
    ok = ok && dt < 60.0;
    std::ostringstream msg;
    msg << "optimal tuning stable in all representations and scenarios, " << dt
        << " s" << detail.str();
    report(5, ok, msg.str());
}

// ------------------------------------------------------------- criterion 6

void criterion_6() {
    auto t0 = Clock::now();
    ParameterDomain d;
    d.names = {"x", "y"};
    d.lo = {-2.0, -2.0};
    d.hi = {2.0, 2.0};
    Oracle oracle = [](const std::vector<double>& rho) {
        StabilityVerdict v;
        v.stable = std::hypot(rho[0], rho[1]) <= 1.0;
        return v;
    };
    int good = 0;
    for (int trial = 0; trial < 20; ++trial) {
        AsmConfig cfg;
        cfg.rng_seed = 100 + trial;
        auto h = run_asm(d, oracle, cfg);
        int correct = 0;
        const int n = 200;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double x = -2.0 + 4.0 * i / (n - 1.0);
                double y = -2.0 + 4.0 * j / (n - 1.0);
                bool pred = predict_probability(h.final_model, {x, y}) >= cfg.p_th;
                correct += (pred == (std::hypot(x, y) <= 1.0)) ? 1 : 0;
            }
        double acc = static_cast<double>(correct) / (n * n);
        int near = 0, total = 0;
        for (const auto& s : h.samples) {
            if (!s.refinement) continue;
            ++total;
            double dist = std::abs(std::hypot(s.rho[0], s.rho[1]) - 1.0) / 4.0;
            near += (dist <= 0.15) ? 1 : 0;
        }
        if (acc >= 0.95 && total > 0 &&
            static_cast<double>(near) / total >= 0.9)
            ++good;
    }
    double dt = seconds_since(t0);
    bool ok = good >= 18 && dt < 120.0;
    std::ostringstream msg;
    msg << "adaptive sampling on the disk oracle, " << good
        << "/20 trials good in " << dt << " s";
    report(6, ok, msg.str());
}

// ------------------------------------------------------------- criterion 7

std::optional<double> min_stable_gain(const NetworkModel& net, GridRep rep,
                                      int index, double lo, double hi,
                                      double step,
                                      std::vector<double> rho) {
    auto ctx = make_ctx(net, rep);
    for (double g = lo; g <= hi + 1e-12; g += step) {
        rho[index] = g;
        auto v = is_ps_stable(rho, kGainNames, ctx);
        if (!v.infeasible && v.stable) return g;
    }
    return std::nullopt;
}

void criterion_7() {
    auto net = load_network(net_path());

    // (a) PLL proportional-gain threshold grows with the integral gain
    auto rho = kRhoStar;
    rho[1] = 100.0;
    auto lo_ki = min_stable_gain(net, GridRep::Full, 0, 0.02, 3.0, 0.05, rho);
    rho[1] = 800.0;
    auto hi_ki = min_stable_gain(net, GridRep::Full, 0, 0.02, 3.0, 0.05, rho);
    bool a_ok = lo_ki && hi_ki && *lo_ki < *hi_ki;

    // (b) the Thevenin equivalent is conservative for the current loop
    auto full_kpi =
        min_stable_gain(net, GridRep::Full, 2, 0.02, 2.0, 0.02, kRhoStar);
    auto thev_kpi = min_stable_gain(net, GridRep::TheveninLoads, 2, 0.02, 2.0,
                                    0.02, kRhoStar);
    bool b_ok = full_kpi && thev_kpi && *thev_kpi > *full_kpi;

    // (c) containment: a gain stable against either equivalent is stable
    // against the full grid
    auto full_ctx = make_ctx(net, GridRep::Full);
    auto tl_ctx = make_ctx(net, GridRep::TheveninLoads);
    auto tn_ctx = make_ctx(net, GridRep::TheveninNoLoads);
    Rng rng(777);
    int violations = 0, labeled = 0;
    for (int k = 0; k < 40; ++k) {
        auto r = kRhoStar;
        if (k < 24) {
            r[2] = 0.02 + (2.0 - 0.02) * rng.uniform();
            r[3] = 10.0 + 290.0 * rng.uniform();
        } else {
            r[0] = 0.02 + (6.0 - 0.02) * rng.uniform();
            r[1] = 20.0 + 840.0 * rng.uniform();
        }
        auto vf = is_ps_stable(r, kGainNames, full_ctx);
        auto vl = is_ps_stable(r, kGainNames, tl_ctx);
        auto vn = is_ps_stable(r, kGainNames, tn_ctx);
        if (vf.infeasible || vl.infeasible || vn.infeasible) continue;
        ++labeled;
        if ((vl.stable || vn.stable) && !vf.stable) ++violations;
    }
    bool c_ok = labeled > 0 && violations == 0;

    std::ostringstream msg;
    msg << "qualitative reproduction:"
        << " pll threshold " << (lo_ki ? *lo_ki : -1) << " < "
        << (hi_ki ? *hi_ki : -1) << ";"
        << " kp_i full " << (full_kpi ? *full_kpi : -1) << " vs thev "
        << (thev_kpi ? *thev_kpi : -1) << ";"
        << " containment " << violations << "/" << labeled << " violations";
    report(7, a_ok && b_ok && c_ok, msg.str());
}

// ------------------------------------------------------------- criterion 8

void criterion_8() {
#ifdef SSW_CLI_PATH
    std::string cli = SSW_CLI_PATH;
    std::string base =
        std::string(cli) + " map --net " + net_path() +
        " --params kp_pll:0.02:6,ki_pll:20:860 --grid thev-loads" +
        " --n-init 24 --n-add 12 --n-cand 400 --seed 9";
    auto run = [&](const std::string& prefix) {
        std::string cmd = base + " --out " + prefix + " > /dev/null 2>&1";
        return std::system(cmd.c_str()) == 0;
    };
    auto slurp = [](const std::string& p) {
        std::ifstream f(p, std::ios::binary);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };
    std::string p1 = "/tmp/ssw_det_a", p2 = "/tmp/ssw_det_b";
    bool ok = run(p1) && run(p2);
    std::string differs;
    for (const char* suffix : {".csv", ".history.jsonl", ".model.json",
                               ".manifest.json"}) {
        std::string b1 = slurp(p1 + suffix), b2 = slurp(p2 + suffix);
        if (b1.empty() || b1 != b2) {
            ok = false;
            differs += std::string(" ") + suffix;
        }
    }
    std::ostringstream msg;
    msg << "identical seeds give byte-identical outputs"
        << (differs.empty() ? "" : " (differs:" + differs + ")");
    report(8, ok, msg.str());
#else
    report(8, false, "cli path not configured");
#endif
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    if (g_failures) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
