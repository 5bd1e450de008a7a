#pragma once

#include <string>
#include <vector>

#include "ssw/components.hpp"

namespace ssw {

struct PortRef {
    std::string block;
    std::string port;
};

// Plain wire: out_port drives in_port one-to-one (optionally negated).
struct Wire {
    PortRef from;  // an output port
    PortRef to;    // an input port
    double sign = 1.0;
};

struct JunctionMember {
    PortRef port;  // an output current port
    double sign = 1.0;
};

// Kirchhoff current junction: the signed sum of member currents drives the
// target current input (currents entering the node are positive).
struct Junction {
    PortRef to;
    std::vector<JunctionMember> members;
};

struct ConnectionGraph {
    std::vector<Wire> wires;
    std::vector<Junction> junctions;
    std::vector<PortRef> external_in;   // unwired inputs exposed to the outside
    std::vector<PortRef> external_out;  // outputs exposed to the outside
};

Junction kcl_junction(PortRef to, std::vector<JunctionMember> members);

struct AssembledSystem {
    Mat a_ps;
    Mat b, c, d;  // for the declared external ports
    std::vector<std::pair<std::string, std::string>> state_labels;  // (block, state)
    std::vector<std::string> in_labels, out_labels;  // per scalar channel
};

// Single-shot LFT elimination of all internal wires/junctions: with the
// stacked block system (A,B,C,D) and interconnection u = K y + P u_ext,
// A_ps = A + B (I - K D)^-1 K C.  Throws NumericalError when the algebraic
// loop is ill-posed (cond(I - K D) > 1e12).
AssembledSystem connect(const std::vector<StateSpaceBlock>& blocks,
                        const ConnectionGraph& graph);

// Builds every component block for the network and wires them per the
// component port directions: machines <-> step-up transformers <-> bus
// capacitors <-> lines/loads.  Line-charging halves and shunt devices are
// aggregated into ONE capacitor block per network bus so every bus voltage
// is a proper state.
AssembledSystem assemble_full_grid(const NetworkModel& net,
                                   const InitialStateSet& init,
                                   const LoadflowResult& sol);

}  // namespace ssw
