#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "ssw/netmodel.hpp"

namespace ssw {

using Complex = std::complex<double>;
using VecC = Eigen::VectorXcd;
using MatC = Eigen::MatrixXcd;

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Options for the bus admittance matrix.  Loads are folded in as constant
// admittances computed at nominal voltage; machine source impedances are
// added only for short-circuit (Thevenin) studies.
struct YbusOptions {
    bool include_loads = true;     // constant-Z loads and shunt devices
    bool include_charging = true;  // line charging halves
};

MatC build_ybus(const NetworkModel& net, const YbusOptions& opt = {});

struct LoadflowResult {
    VecC v;                  // complex bus voltages, model bus order
    int iterations = 0;
    double max_mismatch = 0.0;
    Complex slack_injection;  // S into the network at the slack bus (pu)
};

struct LoadflowOptions {
    double tol = 1e-8;
    int max_iter = 50;
};

// Newton-Raphson in polar coordinates from a flat start.  PV buses hold the
// magnitude set point of the attached machine; the slack bus holds angle 0.
LoadflowResult solve_newton_raphson(const NetworkModel& net,
                                    const LoadflowOptions& opt = {});

// Operating point of one dynamic device computed from the load flow.
struct DeviceInit {
    int bus = 0;
    Complex v_bus;  // bus voltage, global frame
    Complex i_inj;  // current injected into the network, global frame, pu sys
    Complex s_inj;  // complex power injection, pu sys
};

struct InitialStateSet {
    std::vector<DeviceInit> entries;  // one per SG/IBR, in model order
    const DeviceInit& at_bus(int bus) const;
};

// Device operating points from the load flow; the component builders verify
// the steady-state residual of each device at these points to 1e-8.
InitialStateSet init_dynamic_states(const NetworkModel& net,
                                    const LoadflowResult& lf);

}  // namespace ssw
