#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ssw/netmodel.hpp"
#include "ssw/rng.hpp"
#include "ssw/stability.hpp"

namespace ssw {

struct LabeledSample {
    std::vector<double> rho;
    int s = 0;                // 1 stable, 0 unstable
    bool refinement = false;  // provenance: seed vs refinement round
    bool infeasible = false;  // excluded from training
    double worst_re = 0.0;
    std::vector<int> failing_scenarios;
};

struct AsmConfig {
    int n_init = 100;
    int n_r = 20000;
    int n_a = 250;
    double p_th = 0.8;
    std::uint64_t rng_seed = 1;
    double c = 10.0;
    double gamma = 0.0;  // <= 0 selects gamma by 5-fold cross validation
    void validate() const {
        if (n_init < 1 || n_a < 1) throw SchemaError("asm: counts must be positive");
        if (n_r < 10 * n_init) throw SchemaError("asm: n_r must be >= 10 n_init");
        if (!(p_th > 0.0 && p_th < 1.0))
            throw SchemaError("asm: p_th must be in (0,1)");
    }
};

// RBF-kernel SVM with Platt-calibrated probabilities, trained on
// unit-cube-normalized coordinates.
struct SvmModel {
    std::vector<std::vector<double>> sv;  // support set (normalized coords)
    std::vector<double> alpha_y;          // alpha_i * y_i
    double bias = 0.0;
    double gamma = 0.0, c = 0.0;
    double platt_a = 0.0, platt_b = 0.0;
    std::vector<double> lo, hi;  // domain bounds for normalization

    double decision(const std::vector<double>& rho) const;  // uncalibrated f
};

double predict_probability(const SvmModel& model, const std::vector<double>& rho);

std::vector<std::vector<double>> sample_uniform(const ParameterDomain& domain,
                                                int n, std::uint64_t rng_seed);

using Oracle = std::function<StabilityVerdict(const std::vector<double>&)>;

// Labels every point with the oracle; evaluations run in parallel and the
// result order matches the input order.  Oracle failures mark the sample
// infeasible instead of aborting the batch.
std::vector<LabeledSample> label_set(const std::vector<std::vector<double>>& points,
                                     const Oracle& oracle, bool refinement = false);

// Fit on the feasible samples.  gamma <= 0 runs 5-fold CV over
// {1,4,16,64}/N_rho.  Throws on degenerate (single-class) labels.
SvmModel train_svm(const std::vector<LabeledSample>& samples,
                   const ParameterDomain& domain, double c = 10.0,
                   double gamma = 0.0);

// The n_a candidates (from n_r fresh uniform draws) minimizing
// |P(rho) - p_th|; ties broken by generation order.
std::vector<std::vector<double>> refine(const SvmModel& model,
                                        const ParameterDomain& domain,
                                        const AsmConfig& cfg, Rng& rng);

struct AsmHistory {
    std::vector<LabeledSample> samples;  // seed then refinement, in order
    SvmModel initial_model;
    SvmModel final_model;
};

// The paper's loop: seed, label, train, one refinement round, retrain.
AsmHistory run_asm(const ParameterDomain& domain, const Oracle& oracle,
                   const AsmConfig& cfg);

// Deterministic multi-start argmax of the calibrated probability: best point
// of a seeded uniform grid refined by coordinate descent.
std::vector<double> argmax_probability(const SvmModel& model,
                                       const ParameterDomain& domain,
                                       int n_starts = 512,
                                       std::uint64_t rng_seed = 1);

}  // namespace ssw
