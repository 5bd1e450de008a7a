#pragma once

#include "ssw/components.hpp"

namespace ssw {

struct TheveninEquivalent {
    Complex z_th;            // pu on the system base
    double v_th = 0.0;       // open-circuit voltage magnitude, pu
    Complex v_th_c;          // complex open-circuit voltage
    double s_sc_mva = 0.0;   // short-circuit power
    double scr = 0.0;        // s_sc / 350 MVA (the studied IBR's rating)
    double xr = 0.0;         // Im(z_th)/Re(z_th)
    bool include_loads = true;
    int scenario = 0;
};

// Driving-point equivalent at `bus`, the studied device excluded.  Remaining
// machines enter the admittance matrix through their quasi-stationary source
// impedance (rs + j xd') on the system base; include_loads toggles loads,
// shunt devices and line charging together.  v_th comes from replacing every
// remaining machine by its load-flow EMF behind that source impedance.
TheveninEquivalent compute_thevenin(const NetworkModel& net, int bus,
                                    bool include_loads, const LoadflowResult& sol);

// Two-state RL block representing the equivalent grid: inputs are the device
// terminal voltage (v dq) and the held EMF (e dq, left unwired), output the
// device injection current.  x0/u0 may carry the operating point so the
// device block's equilibrium is preserved when assembled.
StateSpaceBlock thevenin_grid_block(const TheveninEquivalent& eq,
                                    const PerUnitBase& base,
                                    Complex v_port = Complex(1, 0),
                                    Complex i_port = Complex(0, 0));

}  // namespace ssw
