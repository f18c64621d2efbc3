#include "polysched/eg_solver.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace polysched {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<double> weights_vector(const PackingPolytope& p,
                                   const std::map<JobId, double>& weights) {
    std::vector<double> w(p.jobs.size());
    for (size_t j = 0; j < p.jobs.size(); ++j) {
        auto it = weights.find(p.jobs[j]);
        if (it == weights.end())
            throw ValidationError("missing weight for job " + std::to_string(p.jobs[j]));
        if (!(it->second > 0))
            throw ValidationError("weights must be positive");
        w[j] = it->second;
    }
    return w;
}

Allocation finish_allocation(const PackingPolytope& p, const std::vector<double>& w,
                             const std::vector<double>& z, const std::vector<double>& m,
                             int iters) {
    Allocation a;
    a.z = z;
    a.row_duals = m;
    a.iterations = iters;
    std::vector<double> x = p.rates_from_z(z);
    for (size_t j = 0; j < p.jobs.size(); ++j) {
        double xj = std::max(x[j], 1e-300);  // clamp near-underflow, see header notes
        a.rates[p.jobs[j]] = xj;
        a.link_duals[p.jobs[j]] = w[j] / xj;
        a.objective += w[j] * std::log(xj);
    }
    return a;
}

// Single alive job: the rate is the maximum feasible value along its column
// and the duals have a one-row closed form.
Allocation solve_single_job(const PackingPolytope& p, const std::vector<double>& w) {
    const JobId id = p.jobs[0];
    const double wj = w[0];
    std::vector<double> z(static_cast<size_t>(p.cols), 0.0);
    std::vector<double> m(p.h_rows.size(), 0.0);

    if (!p.lifted) {
        // x = 1 / max_r B_rj; put all dual mass on the binding row.
        double maxB = 0;
        size_t binding = 0;
        for (size_t r = 0; r < p.h_rows.size(); ++r)
            for (const auto& [c, coeff] : p.h_rows[r].terms)
                if (coeff > maxB) {
                    maxB = coeff;
                    binding = r;
                }
        z[0] = 1.0 / maxB;
        m[binding] = wj;
        return finish_allocation(p, w, z, m, 0);
    }

    // Lifted: pick the best single column; the binding row is the job's own
    // cap (unrelated) or the simplex row (broadcast / all_or_nothing).
    int best_col = -1;
    double best_rate = 0;
    for (const auto& [c, coeff] : p.q_rows[0])
        if (coeff > best_rate) {
            best_rate = coeff;
            best_col = c;
        }
    z[static_cast<size_t>(best_col)] = 1.0;
    for (size_t r = 0; r < p.h_rows.size(); ++r) {
        const RowKey& k = p.h_rows[r].key;
        if (k.kind == RowKind::job_cap && k.ref == id) m[r] = wj;
        if (k.kind == RowKind::simplex) m[r] = wj;
    }
    return finish_allocation(p, w, z, m, 0);
}

// ---------------------------------------------------------------------------
// Direct form: dual ascent on the row prices. The Lagrange dual of the EG
// program is
//   min g(y) = sum_d y_d - sum_j w_j log(B_.j y)   over y >= 0,
// with the price response x_j(y) = w_j / (B_.j y). The bound y >= 0 is
// handled by a log-barrier path, so the duals are the iterates themselves
// and the end point satisfies y_d (1 - B_d.x) = mu exactly.
// ---------------------------------------------------------------------------

Allocation solve_direct(const PackingPolytope& p, const std::vector<double>& w,
                        double tol, int max_iters) {
    const int n = static_cast<int>(p.jobs.size());
    const int R = static_cast<int>(p.h_rows.size());
    MatrixXd B = MatrixXd::Zero(R, n);
    for (int r = 0; r < R; ++r)
        for (const auto& [c, coeff] : p.h_rows[static_cast<size_t>(r)].terms)
            B(r, c) = coeff;
    VectorXd wv = VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) wv[j] = w[static_cast<size_t>(j)];
    const double wsum = wv.sum();

    auto phi = [&](const VectorXd& y, double mu) {
        if ((y.array() <= 0).any()) return std::numeric_limits<double>::infinity();
        VectorXd cp = B.transpose() * y;
        if ((cp.array() <= 0).any()) return std::numeric_limits<double>::infinity();
        return y.sum() - wv.dot(cp.array().log().matrix()) - mu * y.array().log().sum();
    };

    VectorXd y = VectorXd::Constant(R, std::max(wsum, 1.0) / R);
    double mu = std::max(wsum, 1.0);
    const double mu_final = 1e-2 * std::min(tol, 1e-8) * std::min(1.0, wv.minCoeff());

    int total_steps = 0;
    while (true) {
        for (int inner = 0; inner < 80; ++inner) {
            if (++total_steps > max_iters) break;
            VectorXd cp = B.transpose() * y;
            VectorXd x = wv.array() / cp.array();
            VectorXd grad = VectorXd::Ones(R) - B * x - mu * y.cwiseInverse();
            MatrixXd H = B * (wv.array() / (cp.array() * cp.array())).matrix().asDiagonal() *
                         B.transpose();
            H.diagonal() += (mu * y.array().square().inverse()).matrix();
            VectorXd step = H.ldlt().solve(-grad);
            double decrement2 = -grad.dot(step);
            if (decrement2 <= std::max(1e-16, 1e-8 * mu)) break;

            double alpha = 1.0;
            for (int r = 0; r < R; ++r)
                if (step[r] < 0) alpha = std::min(alpha, -0.95 * y[r] / step[r]);
            double f0 = phi(y, mu);
            bool stepped = false;
            for (int ls = 0; ls < 60; ++ls) {
                VectorXd y_try = y + alpha * step;
                if (phi(y_try, mu) < f0 + 1e-4 * alpha * grad.dot(step)) {
                    y = y_try;
                    stepped = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!stepped) break;
        }
        if (mu <= mu_final || total_steps > max_iters) break;
        mu = std::max(mu * 0.15, mu_final);
    }

    VectorXd cp = B.transpose() * y;
    std::vector<double> z(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) z[static_cast<size_t>(j)] = wv[j] / cp[j];
    std::vector<double> m(static_cast<size_t>(R));
    for (int r = 0; r < R; ++r) m[static_cast<size_t>(r)] = y[r];
    Allocation a = finish_allocation(p, w, z, m, total_steps);
    if (total_steps > max_iters) {
        std::map<JobId, double> wm;
        for (size_t j = 0; j < p.jobs.size(); ++j) wm[p.jobs[j]] = w[j];
        KKTReport rep = kkt_residuals(p, wm, a, tol);
        if (!rep.certified())
            throw SolveError("solve_eg: dual ascent did not converge in " +
                                 std::to_string(max_iters) + " iterations",
                             a, rep);
    }
    return a;
}

// ---------------------------------------------------------------------------
// Lifted form: log-barrier Newton on
//   F_mu(z) = -sum_j w_j log([Qz]_j) - mu sum_r log(1 - H_r z) - mu sum_c log z_c
// ---------------------------------------------------------------------------

struct LiftedWork {
    MatrixXd Q;  // jobs x cols
    MatrixXd H;  // rows x cols
    VectorXd w;
};

double lifted_F(const LiftedWork& lw, const VectorXd& z, double mu) {
    VectorXd x = lw.Q * z;
    VectorXd slack = VectorXd::Ones(lw.H.rows()) - lw.H * z;
    if ((x.array() <= 0).any() || (slack.array() <= 0).any() || (z.array() <= 0).any())
        return std::numeric_limits<double>::infinity();
    return -lw.w.dot(x.array().log().matrix()) - mu * slack.array().log().sum() -
           mu * z.array().log().sum();
}

Allocation solve_lifted(const PackingPolytope& p, const std::vector<double>& w,
                        double tol, int max_iters) {
    const int n = static_cast<int>(p.jobs.size());
    const int C = p.cols;
    const int R = static_cast<int>(p.h_rows.size());
    if (C > 4000)
        throw ValidationError("lifted polytope too large for the dense solver (" +
                              std::to_string(C) + " columns)");

    LiftedWork lw;
    lw.Q = MatrixXd::Zero(n, C);
    for (int j = 0; j < n; ++j)
        for (const auto& [c, coeff] : p.q_rows[static_cast<size_t>(j)]) lw.Q(j, c) = coeff;
    lw.H = MatrixXd::Zero(R, C);
    for (int r = 0; r < R; ++r)
        for (const auto& [c, coeff] : p.h_rows[static_cast<size_t>(r)].terms)
            lw.H(r, c) = coeff;
    lw.w = VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) lw.w[j] = w[static_cast<size_t>(j)];

    double max_row_len = 1;
    for (int r = 0; r < R; ++r) max_row_len = std::max(max_row_len, lw.H.row(r).sum());
    VectorXd z = VectorXd::Constant(C, 0.5 / max_row_len);

    const double wsum = lw.w.sum();
    const double wmin = lw.w.minCoeff();
    double mu = std::max(wsum, 1.0);
    const double mu_final = 1e-2 * std::min(tol, 1e-8) * wmin;

    int total_steps = 0;
    while (true) {
        int flat_steps = 0;
        for (int inner = 0; inner < 80; ++inner) {
            if (++total_steps > max_iters) {
                std::map<JobId, double> wm;
                for (size_t j = 0; j < p.jobs.size(); ++j) wm[p.jobs[j]] = w[j];
                VectorXd slack = VectorXd::Ones(R) - lw.H * z;
                std::vector<double> m(static_cast<size_t>(R));
                for (int r = 0; r < R; ++r) m[static_cast<size_t>(r)] = mu / slack[r];
                Allocation best = finish_allocation(
                    p, w, std::vector<double>(z.data(), z.data() + C), m, total_steps);
                throw SolveError("solve_eg: barrier did not converge in " +
                                     std::to_string(max_iters) + " Newton steps",
                                 best, kkt_residuals(p, wm, best, tol));
            }

            VectorXd x = lw.Q * z;
            VectorXd slack = VectorXd::Ones(R) - lw.H * z;
            VectorXd inv_x = x.cwiseInverse();
            VectorXd inv_s = slack.cwiseInverse();

            VectorXd grad = -lw.Q.transpose() * (lw.w.array() * inv_x.array()).matrix() +
                            mu * lw.H.transpose() * inv_s -
                            mu * z.cwiseInverse();
            MatrixXd Hn = lw.Q.transpose() *
                              (lw.w.array() * inv_x.array() * inv_x.array())
                                  .matrix()
                                  .asDiagonal() *
                              lw.Q +
                          mu * lw.H.transpose() *
                              (inv_s.array() * inv_s.array()).matrix().asDiagonal() * lw.H;
            Hn.diagonal() += mu * z.array().square().inverse().matrix();

            VectorXd step = Hn.ldlt().solve(-grad);
            double decrement2 = -grad.dot(step);
            // The last leg needs full centering: the multiplier extraction is
            // only as good as the residual gradient, so keep polishing there.
            double dec_tol = mu <= mu_final ? 1e-21 : std::max(1e-16, 1e-8 * mu);
            if (decrement2 <= dec_tol) break;

            // Fraction-to-boundary, then Armijo.
            double alpha = 1.0;
            for (int c = 0; c < C; ++c)
                if (step[c] < 0) alpha = std::min(alpha, -0.95 * z[c] / step[c]);
            VectorXd hs = lw.H * step;
            for (int r = 0; r < R; ++r)
                if (hs[r] > 0) alpha = std::min(alpha, 0.95 * slack[r] / hs[r]);

            double f0 = lifted_F(lw, z, mu);
            bool stepped = false;
            for (int ls = 0; ls < 60; ++ls) {
                VectorXd z_try = z + alpha * step;
                double f_try = lifted_F(lw, z_try, mu);
                if (f_try < f0 + 1e-4 * alpha * grad.dot(step)) {
                    z = z_try;
                    stepped = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!stepped) {
                // Near the center the decrease falls below fp resolution of F
                // while the gradient still shrinks; take the damped Newton
                // step anyway, a few times at most.
                if (flat_steps < 6 && std::isfinite(lifted_F(lw, z + alpha * step, mu))) {
                    z += alpha * step;
                    ++flat_steps;
                } else {
                    break;
                }
            }
        }
        if (mu <= mu_final) break;
        mu = std::max(mu * 0.15, mu_final);
    }

    VectorXd slack = VectorXd::Ones(R) - lw.H * z;
    VectorXd m_raw = slack.cwiseInverse() * mu;

    // mu/slack is a 0/0 at the path's end; re-derive the multipliers of the
    // tight rows by least squares against the support columns' stationarity,
    // which only uses the (accurate) primal point. Support/tightness
    // thresholds are swept and the candidate with the smallest measured KKT
    // defect wins; the raw barrier multipliers stay as the fallback.
    VectorXd x = lw.Q * z;
    VectorXd u = lw.w.array() / x.array();
    VectorXd qtu = lw.Q.transpose() * u;
    const double zmax = z.maxCoeff();
    const double price_scale = std::max(1.0, qtu.maxCoeff());

    auto defect = [&](const VectorXd& m) {
        double worst = std::abs(m.sum() - wsum) / wsum;
        VectorXd gap = lw.H.transpose() * m - qtu;
        for (int r = 0; r < R; ++r) worst = std::max(worst, std::abs(m[r] * slack[r]));
        for (int c = 0; c < C; ++c) {
            worst = std::max(worst, std::max(0.0, -gap[c]) / price_scale);
            worst = std::max(worst, z[c] * std::max(0.0, gap[c]));
        }
        return worst;
    };

    // Minimum-norm correction of the raw duals onto the support equations.
    // The raw point sits near the analytic center of the optimal dual face,
    // so a small correction keeps every off-support column feasible even
    // when the split of degenerate prices is underdetermined.
    VectorXd m_best = m_raw;
    double best = defect(m_raw);
    auto try_candidate = [&](const std::vector<int>& support, const std::vector<int>& tight,
                             bool central_path_rhs) {
        if (tight.empty() || support.empty()) return;
        MatrixXd A = MatrixXd::Zero(static_cast<int>(support.size()),
                                    static_cast<int>(tight.size()));
        VectorXd rhs(static_cast<int>(support.size()));
        for (size_t si = 0; si < support.size(); ++si) {
            // Target gap on the central path is exactly mu / z_c.
            double target = qtu[support[si]] + (central_path_rhs ? mu / z[support[si]] : 0.0);
            for (int r = 0; r < R; ++r) target -= lw.H(r, support[si]) * m_raw[r];
            rhs[static_cast<int>(si)] = target;
            for (size_t ti = 0; ti < tight.size(); ++ti)
                A(static_cast<int>(si), static_cast<int>(ti)) = lw.H(tight[ti], support[si]);
        }
        Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
        VectorXd dT = cod.solve(rhs);
        VectorXd m_try = m_raw;
        for (size_t ti = 0; ti < tight.size(); ++ti)
            m_try[tight[ti]] = std::max(0.0, m_raw[tight[ti]] + dT[static_cast<int>(ti)]);
        double d = defect(m_try);
        if (d < best) {
            best = d;
            m_best = m_try;
        }
    };
    for (double tau_s : {1e-7, 1e-4, 1e-2}) {
        std::vector<int> tight;
        for (int r = 0; r < R; ++r)
            if (slack[r] <= tau_s) tight.push_back(r);
        for (double tau_z : {1e-7, 1e-4, 1e-2}) {
            std::vector<int> support;
            for (int c = 0; c < C; ++c)
                if (z[c] > tau_z * zmax) support.push_back(c);
            try_candidate(support, tight, false);
        }
        // All columns against the exact central-path gaps; this pins the
        // degenerate price directions that the support equations leave free.
        std::vector<int> all_cols(static_cast<size_t>(C));
        for (int c = 0; c < C; ++c) all_cols[static_cast<size_t>(c)] = c;
        try_candidate(all_cols, tight, true);
    }

    std::vector<double> m(static_cast<size_t>(R));
    for (int r = 0; r < R; ++r) m[static_cast<size_t>(r)] = m_best[r];
    return finish_allocation(p, w, std::vector<double>(z.data(), z.data() + C), m,
                             total_steps);
}

}  // namespace

Allocation solve_eg(const PackingPolytope& p, const std::map<JobId, double>& weights,
                    double tol, int max_iters) {
    if (p.jobs.empty()) throw ValidationError("solve_eg: no alive jobs");
    std::vector<double> w = weights_vector(p, weights);
    for (size_t j = 0; j < p.jobs.size(); ++j)
        if (p.q_rows[j].empty())
            throw ValidationError("job " + std::to_string(p.jobs[j]) +
                                  " has an all-zero column (rate unbounded)");

    Allocation a = p.jobs.size() == 1
                       ? solve_single_job(p, w)
                       : (p.lifted ? solve_lifted(p, w, tol, max_iters)
                                   : solve_direct(p, w, tol, max_iters));
    return a;
}

KKTReport kkt_residuals(const PackingPolytope& p, const std::map<JobId, double>& weights,
                        const Allocation& a, double tol) {
    std::vector<double> w = weights_vector(p, weights);
    const size_t n = p.jobs.size();
    if (a.row_duals.size() != p.h_rows.size())
        throw ValidationError("kkt_residuals: dual vector does not match the polytope rows");

    KKTReport rep;
    rep.tol = tol;
    double wsum = 0;
    for (double v : w) wsum += v;

    std::vector<double> x(n);
    for (size_t j = 0; j < n; ++j) {
        auto it = a.rates.find(p.jobs[j]);
        if (it == a.rates.end() || !(it->second > 0))
            throw ValidationError("kkt_residuals: rates must be positive on alive jobs");
        x[j] = it->second;
    }
    for (double m : a.row_duals)
        if (m < 0) rep.stationarity_residual = std::numeric_limits<double>::infinity();

    double dual_sum = 0;
    for (double m : a.row_duals) dual_sum += m;
    rep.dual_sum_gap = std::abs(dual_sum - wsum) / wsum;

    if (!p.lifted) {
        // z is x itself here.
        for (size_t r = 0; r < p.h_rows.size(); ++r) {
            double load = p.eval_row(p.h_rows[r], x);
            rep.primal_residual = std::max(rep.primal_residual, load - 1.0);
            rep.comp_slack_residual =
                std::max(rep.comp_slack_residual, std::abs(a.row_duals[r] * (load - 1.0)));
        }
        rep.primal_residual = std::max(0.0, rep.primal_residual);
        for (size_t j = 0; j < n; ++j) {
            double col_price = 0;
            for (size_t r = 0; r < p.h_rows.size(); ++r)
                for (const auto& [c, coeff] : p.h_rows[r].terms)
                    if (c == static_cast<int>(j)) col_price += coeff * a.row_duals[r];
            double target = w[j] / x[j];
            rep.stationarity_residual =
                std::max(rep.stationarity_residual, std::abs(target - col_price) / target);
        }
        return rep;
    }

    if (static_cast<int>(a.z.size()) != p.cols)
        throw ValidationError("kkt_residuals: z does not match the polytope columns");
    std::vector<double> qz = p.rates_from_z(a.z);
    for (size_t j = 0; j < n; ++j) {
        double gap = x[j] - qz[j];
        rep.primal_residual = std::max(rep.primal_residual, gap / std::max(x[j], 1e-300));
        rep.comp_slack_residual =
            std::max(rep.comp_slack_residual, std::abs((w[j] / x[j]) * gap));
    }
    for (size_t r = 0; r < p.h_rows.size(); ++r) {
        double load = p.eval_row(p.h_rows[r], a.z);
        rep.primal_residual = std::max(rep.primal_residual, load - 1.0);
        rep.comp_slack_residual =
            std::max(rep.comp_slack_residual, std::abs(a.row_duals[r] * (load - 1.0)));
    }
    rep.primal_residual = std::max(0.0, rep.primal_residual);

    // z-column dual feasibility (normalized by the overall price scale) and
    // complementarity.
    std::vector<double> qtu(static_cast<size_t>(p.cols), 0.0);
    std::vector<double> htm(static_cast<size_t>(p.cols), 0.0);
    for (size_t j = 0; j < n; ++j)
        for (const auto& [c, coeff] : p.q_rows[j])
            qtu[static_cast<size_t>(c)] += coeff * w[j] / x[j];
    for (size_t r = 0; r < p.h_rows.size(); ++r)
        for (const auto& [c, coeff] : p.h_rows[r].terms)
            htm[static_cast<size_t>(c)] += coeff * a.row_duals[r];
    double price_scale = 1.0;
    for (double v : qtu) price_scale = std::max(price_scale, v);
    for (int c = 0; c < p.cols; ++c) {
        double gap = htm[static_cast<size_t>(c)] - qtu[static_cast<size_t>(c)];
        rep.stationarity_residual =
            std::max(rep.stationarity_residual, std::max(0.0, -gap) / price_scale);
        rep.comp_slack_residual = std::max(
            rep.comp_slack_residual, a.z[static_cast<size_t>(c)] * std::max(0.0, gap));
    }
    return rep;
}

PriceReport equilibrium_prices(const Instance& inst, const PackingPolytope& p,
                               const Allocation& a, double tol) {
    if (inst.family != Family::multidim)
        throw ValidationError("equilibrium_prices: multidim family only");

    PriceReport rep;
    const int D = static_cast<int>(inst.capacities.size());
    rep.prices.assign(static_cast<size_t>(D), 0.0);

    std::vector<double> x(p.jobs.size());
    for (size_t j = 0; j < p.jobs.size(); ++j) x[j] = a.rates.at(p.jobs[j]);

    for (size_t r = 0; r < p.h_rows.size(); ++r) {
        const RowKey& k = p.h_rows[r].key;
        if (k.kind != RowKind::resource) continue;
        rep.prices[static_cast<size_t>(k.ref)] =
            a.row_duals[r] / inst.capacities[static_cast<size_t>(k.ref)];
        // Market clearing: priced resources are fully allocated.
        double load = p.eval_row(p.h_rows[r], x);
        if (rep.prices[static_cast<size_t>(k.ref)] > tol && load < 1.0 - tol)
            rep.market_clearing = false;
    }

    for (size_t j = 0; j < p.jobs.size(); ++j) {
        const Job& job = inst.job(p.jobs[j]);
        double spend = 0;
        for (int d = 0; d < D; ++d)
            spend += rep.prices[static_cast<size_t>(d)] * job.payload[static_cast<size_t>(d)];
        // A binding x_j <= 1 row acts as the job's own price.
        for (size_t r = 0; r < p.h_rows.size(); ++r)
            if (p.h_rows[r].key.kind == RowKind::singleton &&
                p.h_rows[r].key.ref == p.jobs[j])
                spend += a.row_duals[r];
        double resid = std::abs(x[j] * spend - job.weight);
        rep.budget_residual[p.jobs[j]] = resid;
        rep.max_budget_residual = std::max(rep.max_budget_residual, resid);
    }
    return rep;
}

}  // namespace polysched
