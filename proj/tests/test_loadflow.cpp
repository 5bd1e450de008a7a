#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <complex>

#include "doctest.h"
#include "ssw/loadflow.hpp"
#include "ssw/netmodel.hpp"

using namespace ssw;

namespace {

// slack --(r + jx)-- PQ load
NetworkModel two_bus(double r, double x, double p_mw, double q_mvar) {
    NetworkModel net;
    net.schema_version = 1;
    net.buses = {{1, 220.0, BusKind::Slack}, {2, 220.0, BusKind::Pq}};
    net.branches = {{1, 2, r, x, 0.0}};
    net.loads = {{2, p_mw, q_mvar}};
    return net;
}

// closed form |V2| for the two-bus case: with S = P + jQ drawn at bus 2,
// V2 conj((V1 - V2)/z) = -S has the scalar form
//   v^4 + v^2 (2(P r + Q x) - 1) + (P^2 + Q^2) |z|^2 = 0,  v = |V2|
double two_bus_vm(double r, double x, double p, double q) {
    double b = 2.0 * (p * r + q * x) - 1.0;
    double c = (p * p + q * q) * (r * r + x * x);
    double v2 = (-b + std::sqrt(b * b - 4.0 * c)) / 2.0;
    return std::sqrt(v2);
}

}  // namespace

TEST_CASE("two-bus load flow matches the closed form to 1e-10") {
    double r = 0.02, x = 0.12, p = 80.0, q = 30.0;
    auto net = two_bus(r, x, p, q);
    auto sol = solve_newton_raphson(net);
    double vm = two_bus_vm(r, x, p / 100.0, q / 100.0);
    CHECK(std::abs(std::abs(sol.v[1]) - vm) < 1e-10);
    CHECK(std::abs(sol.v[0] - Complex(1.0, 0.0)) < 1e-14);
    CHECK(sol.max_mismatch < 1e-10);

    // slack injection covers load plus series loss
    Complex i = (sol.v[0] - sol.v[1]) / Complex(r, x);
    Complex s_slack = sol.v[0] * std::conj(i);
    CHECK(std::abs(sol.slack_injection - s_slack) < 1e-10);
}

TEST_CASE("infeasible loading throws") {
    auto net = two_bus(0.02, 0.30, 400.0, 150.0);  // far past the nose point
    CHECK_THROWS_AS(solve_newton_raphson(net), InfeasibleError);
}

TEST_CASE("pv bus holds its magnitude set point") {
    NetworkModel net;
    net.schema_version = 1;
    net.buses = {{1, 220.0, BusKind::Slack},
                 {2, 220.0, BusKind::Pq},
                 {3, 220.0, BusKind::Pv}};
    net.branches = {{1, 2, 0.01, 0.1, 0.0}, {2, 3, 0.01, 0.08, 0.0}};
    net.loads = {{2, 120.0, 40.0}};
    SgSpec g;
    g.bus = 3;
    g.s_nom_mva = 200.0;
    g.v0 = 1.04;
    g.p0_mw = 80.0;
    net.generators = {g};
    auto sol = solve_newton_raphson(net);
    CHECK(std::abs(sol.v[2]) == doctest::Approx(1.04).epsilon(1e-10));
    // generated P at bus 3 equals dispatch
    YbusOptions opt;
    opt.include_loads = false;
    auto y = build_ybus(net, opt);
    VecC inj = y * sol.v;
    Complex s3 = sol.v[2] * std::conj(inj[2]);
    CHECK(s3.real() == doctest::Approx(0.8).epsilon(1e-8));
}

TEST_CASE("ybus options: loads, charging, shunt devices") {
    NetworkModel net = two_bus(0.01, 0.1, 50.0, 10.0);
    net.branches[0].b_shunt = 0.2;
    net.shunts = {{2, 30.0}};

    YbusOptions all;
    auto y_all = build_ybus(net, all);
    YbusOptions none;
    none.include_loads = false;
    none.include_charging = false;
    auto y_none = build_ybus(net, none);

    // series part is identical
    CHECK(std::abs(y_all(0, 1) - y_none(0, 1)) < 1e-14);
    // diagonal differs by charging + shunt device + load admittance
    Complex d = y_all(1, 1) - y_none(1, 1);
    Complex expect = Complex(0.0, 0.1) + Complex(0.0, 0.3) +
                     std::conj(Complex(0.5, 0.1));  // load at V = 1
    CHECK(std::abs(d - expect) < 1e-12);
}

TEST_CASE("init_dynamic_states recovers device injections") {
    NetworkModel net;
    net.schema_version = 1;
    net.buses = {{1, 220.0, BusKind::Slack}, {2, 220.0, BusKind::Pq},
                 {3, 220.0, BusKind::Pv}};
    net.branches = {{1, 2, 0.01, 0.1, 0.02}, {2, 3, 0.01, 0.08, 0.02}};
    net.loads = {{2, 100.0, 35.0}};
    SgSpec g;
    g.bus = 3;
    g.s_nom_mva = 200.0;
    g.v0 = 1.03;
    g.p0_mw = 60.0;
    net.generators = {g};
    auto sol = solve_newton_raphson(net);
    auto init = init_dynamic_states(net, sol);
    REQUIRE(init.entries.size() == 1);
    const auto& d = init.at_bus(3);
    CHECK(d.v_bus == sol.v[2]);
    CHECK(std::abs(d.s_inj - d.v_bus * std::conj(d.i_inj)) < 1e-12);
    CHECK(d.s_inj.real() == doctest::Approx(0.6).epsilon(1e-8));
    CHECK_THROWS(init.at_bus(1));
}
