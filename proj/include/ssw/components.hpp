#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ssw/loadflow.hpp"
#include "ssw/netmodel.hpp"

namespace ssw {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class PortKind { VoltageDq, CurrentDq, Scalar };

struct PortSpec {
    std::string name;
    PortKind kind = PortKind::Scalar;
    int width = 1;  // 1 for scalar references, 2 for dq pairs
};

// One LTI subsystem with named ports.  The nonlinear residual/output maps
// are retained so tests can verify both the equilibrium and the exactness
// of the linearization by finite differences.
struct StateSpaceBlock {
    std::string label;
    Mat A, B, C, D;
    Vec x0, u0;  // equilibrium the block was linearized at
    std::vector<PortSpec> in_ports, out_ports;
    std::vector<std::string> state_names;
    std::function<Vec(const Vec&, const Vec&)> f;  // xdot(x,u); may be empty
    std::function<Vec(const Vec&, const Vec&)> g;  // y(x,u); may be empty

    int n_x() const { return static_cast<int>(A.rows()); }
    int n_u() const { return static_cast<int>(B.cols()); }
    int n_y() const { return static_cast<int>(C.rows()); }

    // channel offset of a named port within the flattened input/output vector
    int in_offset(const std::string& port) const;
    int out_offset(const std::string& port) const;
    const PortSpec& in_port(const std::string& port) const;
    const PortSpec& out_port(const std::string& port) const;
};

// Synchronous machine: Sauer-Pai 6th order + governor + steam turbine +
// IEEE type 1 AVR.  Inputs (p_ref, v_ref, i dq), output (v dq), global
// frame, port currents in system pu.
StateSpaceBlock linearize_sg(const SgSpec& spec, const DeviceInit& init,
                             const PerUnitBase& base);

// Grid-following IBR with LC filter, PLL, current PI and (versions 2/3) a
// dc-link voltage loop.  Inputs (p_ref or i_dc, q_ref, i dq), output (v dq).
StateSpaceBlock linearize_ibr(const IbrSpec& spec, const DeviceInit& init,
                              const PerUnitBase& base);

// T-circuit transformer: two winding RL branches plus a magnetizing branch
// (6 states).  Inputs (v1 dq, v2 dq), outputs the currents INTO the
// transformer at both ports (i1 dq, i2 dq), system pu.
StateSpaceBlock transformer_block(const TransformerSpec& spec,
                                  const PerUnitBase& base);

struct LineBlocks {
    StateSpaceBlock rl;  // in (va dq, vb dq) -> out current a->b (i dq)
    std::optional<StateSpaceBlock> shunt_from, shunt_to;  // absent if b = 0
};
LineBlocks line_blocks(const BranchSpec& spec, const PerUnitBase& base);

// Shunt capacitor: input net injected current (i dq) -> output voltage.
StateSpaceBlock shunt_block(const std::string& label, double b_pu,
                            const PerUnitBase& base);

// Constant series RL drawing (P,Q) at its load-flow voltage; input v dq ->
// output drawn current i dq.  Rejects P <= 0 and capacitive Q.
StateSpaceBlock load_block(const LoadSpec& spec, Complex v_bus,
                           const PerUnitBase& base);

// Modulus-optimum current-controller gains: kp = (L/omega_base)/tau,
// ki = R/tau, with L and R the pu filter values (L/omega_base is the SI
// inductance on the control base, so both gains come out in pu).
std::pair<double, double> modulus_optimum_gains(const IbrSpec& spec, double tau_s);

}  // namespace ssw
