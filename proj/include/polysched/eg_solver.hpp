#pragma once

#include <map>
#include <vector>

#include "polysched/polytope.hpp"

namespace polysched {

// Optimum of the Eisenberg-Gale program  max sum_j w_j log x_j  over the
// polytope, together with the dual variables that certify it.
struct Allocation {
    std::map<JobId, double> rates;       // x*_j > 0
    std::map<JobId, double> link_duals;  // u_j = w_j / x_j (the x-row prices)
    std::vector<double> row_duals;       // aligned with polytope.h_rows (y / m)
    std::vector<double> z;               // lifted assignment variables
    double objective = 0.0;              // sum w_j log x_j
    int iterations = 0;

    double rate(JobId id) const { return rates.at(id); }
};

// Residuals of the KKT system. For the direct form these are exactly the
// textbook conditions; for lifted polytopes the stationarity residual covers
// the z-column dual feasibility ([Q^T u - H^T m]_c^+, relative) and the
// column complementarity z_c * (H^T m - Q^T u)_c joins the complementary
// slackness residual.
struct KKTReport {
    double primal_residual = 0.0;        // max row violation (B_d.x - 1)^+
    double comp_slack_residual = 0.0;    // max |dual * slack|
    double stationarity_residual = 0.0;  // relative
    double dual_sum_gap = 0.0;           // |sum duals - sum weights| / sum weights
    double tol = 1e-8;

    bool certified() const {
        return primal_residual <= tol && comp_slack_residual <= tol &&
               stationarity_residual <= tol && dual_sum_gap <= tol;
    }
};

class SolveError : public Error {
public:
    SolveError(const std::string& msg, Allocation best, KKTReport report)
        : Error(msg), best_(std::move(best)), report_(report) {}
    const Allocation& best() const { return best_; }
    const KKTReport& report() const { return report_; }

private:
    Allocation best_;
    KKTReport report_;
};

// Solves the EG program to KKT tolerance `tol`. Direct polytopes use
// projected dual ascent on the row prices with Newton steps
// (x_j(y) = w_j / (B_.j y)); lifted polytopes use a log-barrier Newton path
// in z-space. Deterministic in its inputs.
Allocation solve_eg(const PackingPolytope& p, const std::map<JobId, double>& weights,
                    double tol = 1e-8, int max_iters = 100000);

KKTReport kkt_residuals(const PackingPolytope& p, const std::map<JobId, double>& weights,
                        const Allocation& a, double tol = 1e-8);

// Multidim only: per-unit resource prices lambda_d = y_d / R_d, per-job
// budget residuals |x_j * spend_j - w_j| (a binding singleton row's dual is
// the job's own price), and the market-clearing check.
struct PriceReport {
    std::vector<double> prices;
    std::map<JobId, double> budget_residual;
    double max_budget_residual = 0.0;
    bool market_clearing = true;
};

PriceReport equilibrium_prices(const Instance& inst, const PackingPolytope& p,
                               const Allocation& a, double tol = 1e-6);

}  // namespace polysched
