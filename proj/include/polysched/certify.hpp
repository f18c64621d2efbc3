#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "polysched/engine.hpp"

namespace polysched {

// Smallest value m in the list with sum of weights over {values <= m} at
// least half the total weight.
double weighted_median(std::span<const double> values, std::span<const double> weights);

// Uniform re-slotting of a trace. Work q_jt is integrated exactly from the
// segments; duals are time-weighted segment averages within each slot. All
// time quantities stay in real units (slot l covers [l*delta, (l+1)*delta)).
struct SlottedTrace {
    double delta = 0;
    int slots = 0;
    bool lifted = false;

    std::vector<JobId> jobs;  // instance (release) order
    std::vector<double> weights, sizes, releases, completions;
    std::vector<std::vector<double>> q;  // [job][slot], work done (includes speed)
    std::vector<RowKey> row_keys;
    std::vector<std::vector<double>> ybar;  // [row][slot], slot-averaged duals
    std::vector<std::vector<double>> ubar;  // [job][slot], link duals (lifted)
    std::vector<double> weight_unsatisfied;  // W_l = sum of w_j over U_l

    bool in_U(size_t j, int l) const {
        return completions[j] > static_cast<double>(l) * delta + 1e-12;
    }
    // A slot claimable for alpha: entirely before the release, or entirely
    // inside [r_j, C_j]. Straddling slots are never claimed (their partial
    // averages would break the dual-fitting chain).
    bool claimable(size_t j, int l) const;
    int job_pos(JobId id) const;
};

// delta = 0 picks the default min(min_j p_j, min event gap) / 128, capped so
// every job spans at least 100 slots of work. Throws when the grid cannot
// satisfy the spanning precondition.
SlottedTrace slot_trace(const Trace& tr, double delta = 0);

// Completion-time dual-fitting certificate built from a PF trace (engine
// speed 1) and its per-segment duals. beta rows are stored in the paper's
// normalization: beta[d][l] = (delta/s) * sum_{l' >= l} zeta_l' ybar[d][l'],
// so the dual objective is sum(alpha) - sum(beta). For lifted polytopes the
// link prices gamma[j][l] = sum_{l' >= l} zeta_l' ubar[j][l'] witness the
// x-row constraints and the H-row betas cover the z columns.
struct CompletionDualCert {
    double s = 32;
    double delta = 0;
    bool lifted = false;
    std::vector<JobId> jobs;
    std::vector<double> alpha;               // per job, time units
    std::vector<double> zeta;                // per slot
    std::vector<RowKey> row_keys;
    std::vector<std::vector<double>> beta;   // [row][slot]
    std::vector<std::vector<double>> gamma;  // [job][slot], lifted only
    double dual_objective = 0;
    double alg_weighted_completion = 0;
    double lower_bound = 0;  // dual_objective / s <= OPT
    double slotting_error = 0;
};

CompletionDualCert completion_duals(const SlottedTrace& st, const Trace& tr, double s = 32);

struct CertViolation {
    std::string what;
    JobId job = -1;
    int slot = -1;
    int row = -1;  // row/machine/column index depending on `what`
    double lhs = 0, rhs = 0;
};

struct CertCheckReport {
    bool ok = true;
    std::vector<CertViolation> violations;
    double max_constraint_residual = 0;
    double dual_objective = 0;
    double lower_bound = 0;
    double alg_objective = 0;
    double certified_ratio = 0;  // alg / lower_bound
    bool lemma_alpha_ok = true;  // sum alpha >= (1/2) sum w_j C_j - slack
    bool lemma_beta_ok = true;   // per-slot beta mass <= (8/s) delta W_l
    std::string summary;
};

// Recomputes every certificate quantity from the slotted trace (flagging any
// entry off by more than 0.5%) and verifies the DUAL_s constraints for every
// (job, slot) plus, for lifted forms, every (z-column, slot).
CertCheckReport check_completion_cert(const CompletionDualCert& cert,
                                      const SlottedTrace& st, const Trace& tr);

// Flow-time dual certificate for BLASS traces (unweighted, unrelated
// machines). alpha_j = Delta_j/(k+2); beta_it = N_i(t)/(k+3) held per event
// segment; the objective integrates the betas exactly, so
// sum(alpha) - integral(beta) = sum F * eps^2/((1+2eps)(1+3eps)) up to fp.
struct UnrelatedDualCert {
    double epsilon = 0.5;
    int k = 2;
    double eta = 2.5;
    std::vector<JobId> jobs;
    std::vector<double> delta_j;  // Delta_j, time units
    std::vector<double> alpha;    // Delta_j / (k+2)
    std::vector<std::vector<double>> beta;  // [segment][machine] = N_i/(k+3)
    double beta_integral = 0;
    double dual_objective = 0;
    double total_flow = 0;
    double sum_delta = 0;
};

UnrelatedDualCert blass_duals(const Trace& tr, double epsilon);

CertCheckReport check_blass_cert(const UnrelatedDualCert& cert, const Trace& tr);

// Exact offline optimum of 1 || sum w_j C_j by Smith's rule. Requires a
// single-resource instance with unit demands and all releases 0.
double smith_opt(const Instance& inst);

enum class OfflineObjective { weighted_completion, total_flow };

// Exponential slotted DP over injective job->machine assignments; test-only
// oracle. Work is discretized to delta units and completions round up to slot
// ends, so the value overestimates OPT by at most n * delta * max w.
double brute_force_opt(const Instance& inst, OfflineObjective obj, double delta);

// Certificate export for the CLI.
std::string emit_completion_cert(const CompletionDualCert& cert, const CertCheckReport& rep);
std::string emit_blass_cert(const UnrelatedDualCert& cert, const CertCheckReport& rep);

}  // namespace polysched
