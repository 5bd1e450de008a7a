#pragma once

#include <map>
#include <string>
#include <vector>

#include "ssw/assembly.hpp"
#include "ssw/thevenin.hpp"

namespace ssw {

struct Mode {
    Complex lambda;
    double freq_hz = 0.0;
    double damping = 0.0;
    // top participating states by |p_ki|, (state label, participation)
    std::vector<std::pair<std::string, double>> dominant;
};

struct EigenReport {
    std::vector<Complex> eigenvalues;
    std::vector<Mode> modes;
};

EigenReport eigenvalues(const AssembledSystem& sys);

// True iff every eigenvalue has Re < 0 after deflating at most one
// structural zero mode (|lambda| < eps with all other modes bounded away).
bool is_stable(const AssembledSystem& sys, double eps = 1e-8);
bool spectrum_stable(const std::vector<Complex>& lam, double eps = 1e-8);

enum class GridRep { Full, TheveninLoads, TheveninNoLoads };

// Immutable sweep context shared across is_ps_stable evaluations.
struct SweepContext {
    NetworkModel net;                // base network (SG everywhere)
    std::vector<int> scenario_ids;   // scenarios to sweep (all must be stable)
    GridRep rep = GridRep::Full;
    int ibr_bus = 10;                // SG replaced by the studied IBR
    int ibr_version = 1;
    std::map<std::string, double> fixed_gains;  // held while rho varies
};

struct StabilityVerdict {
    bool stable = false;
    bool infeasible = false;  // some scenario's load flow failed
    double worst_re = 0.0;    // max Re(lambda) over all scenarios
    std::vector<int> failing_scenarios;
};

// The expensive oracle: linearizes the chosen grid representation for every
// scenario and reports stable iff all of them are stable.  rho entries are
// named IBR gains (kp_pll, ki_pll, kp_i, ki_i, kp_dc, ...).
StabilityVerdict is_ps_stable(const std::vector<double>& rho,
                              const std::vector<std::string>& rho_names,
                              const SweepContext& ctx);

}  // namespace ssw
