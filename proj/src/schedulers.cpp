#include "polysched/schedulers.hpp"

#include <algorithm>
#include <cmath>

#include "polysched/blass.hpp"

namespace polysched {

SchedulerDecision pf_allocate(const SchedulerView& view, double tol) {
    if (view.alive().empty()) throw ValidationError("pf_allocate: no alive jobs");
    PackingPolytope poly = view.build_alive_polytope();
    Allocation a = solve_eg(poly, view.weights(), tol);
    KKTReport rep = kkt_residuals(poly, view.weights(), a, tol);
    if (!rep.certified())
        throw SolveError("pf_allocate: solution failed KKT certification", a, rep);

    SchedulerDecision dec;
    dec.rates = a.rates;
    dec.has_duals = true;
    for (size_t r = 0; r < poly.h_rows.size(); ++r)
        dec.row_duals.emplace_back(poly.h_rows[r].key, a.row_duals[r]);
    dec.link_duals = a.link_duals;
    dec.has_kkt = true;
    dec.kkt = rep;
    if (poly.lifted) {
        for (int c = 0; c < poly.cols; ++c) {
            double zc = a.z[static_cast<size_t>(c)];
            if (zc <= 1e-12) continue;
            const auto& col = poly.columns[static_cast<size_t>(c)];
            dec.shares.push_back({col.job, col.machine, col.set_index, zc});
        }
    }
    return dec;
}

namespace {

// Progressive filling over explicit rows: all unfrozen jobs grow along `dir`
// until a row they participate in saturates or their own cap x_j = 1 binds.
std::map<JobId, double> progressive_fill(const PackingPolytope& poly,
                                         const std::vector<double>& dir) {
    const size_t n = poly.jobs.size();
    std::vector<double> x(n, 0.0);
    std::vector<bool> frozen(n, false);
    const double tol = 1e-12;

    for (size_t round = 0; round <= n + poly.h_rows.size(); ++round) {
        size_t unfrozen = 0;
        for (size_t j = 0; j < n; ++j) unfrozen += frozen[j] ? 0 : 1;
        if (unfrozen == 0) break;

        double theta = std::numeric_limits<double>::infinity();
        for (const auto& row : poly.h_rows) {
            double load = 0, grow = 0;
            for (const auto& [c, coeff] : row.terms) {
                load += coeff * x[static_cast<size_t>(c)];
                if (!frozen[static_cast<size_t>(c)]) grow += coeff * dir[static_cast<size_t>(c)];
            }
            if (grow > tol) theta = std::min(theta, std::max(0.0, 1.0 - load) / grow);
        }
        if (!std::isfinite(theta)) break;

        for (size_t j = 0; j < n; ++j)
            if (!frozen[j]) x[j] += theta * dir[j];

        // Freeze the participants of every row that is now tight.
        for (const auto& row : poly.h_rows) {
            double load = 0;
            for (const auto& [c, coeff] : row.terms) load += coeff * x[static_cast<size_t>(c)];
            if (load >= 1.0 - 1e-9)
                for (const auto& [c, coeff] : row.terms)
                    if (coeff > 0) frozen[static_cast<size_t>(c)] = true;
        }
    }

    std::map<JobId, double> out;
    for (size_t j = 0; j < n; ++j) out[poly.jobs[j]] = x[j];
    return out;
}

// Lifted families: uniform rate growth with LP feasibility as the oracle.
std::map<JobId, double> water_fill_lifted(const PackingPolytope& poly) {
    const size_t n = poly.jobs.size();
    std::vector<bool> frozen(n, false);
    std::map<JobId, double> x;
    for (JobId id : poly.jobs) x[id] = 0.0;

    double rate_hi = 0;
    for (const auto& q : poly.q_rows)
        for (const auto& [c, coeff] : q) rate_hi = std::max(rate_hi, coeff);
    rate_hi *= static_cast<double>(poly.cols);

    auto feasible = [&](const std::map<JobId, double>& cand) {
        return check_feasible(poly, cand, 1e-9).feasible;
    };

    for (size_t round = 0; round < n; ++round) {
        if (std::all_of(frozen.begin(), frozen.end(), [](bool b) { return b; })) break;
        // Largest uniform increment for the unfrozen set, by bisection.
        double lo = 0, hi = rate_hi;
        for (int it = 0; it < 50; ++it) {
            double mid = 0.5 * (lo + hi);
            std::map<JobId, double> cand = x;
            for (size_t j = 0; j < n; ++j)
                if (!frozen[j]) cand[poly.jobs[j]] += mid;
            if (feasible(cand))
                lo = mid;
            else
                hi = mid;
        }
        for (size_t j = 0; j < n; ++j)
            if (!frozen[j]) x[poly.jobs[j]] += lo;

        // A job freezes when it cannot grow alone anymore.
        bool any_frozen = false;
        for (size_t j = 0; j < n; ++j) {
            if (frozen[j]) continue;
            std::map<JobId, double> cand = x;
            cand[poly.jobs[j]] += std::max(1e-7, 1e-6 * lo);
            if (!feasible(cand)) {
                frozen[j] = true;
                any_frozen = true;
            }
        }
        if (!any_frozen) break;  // growth exhausted at fp resolution
    }
    return x;
}

}  // namespace

SchedulerDecision maxmin_allocate(const SchedulerView& view) {
    if (view.alive().empty()) throw ValidationError("maxmin_allocate: no alive jobs");
    PackingPolytope poly = view.build_alive_polytope();
    SchedulerDecision dec;

    if (!poly.lifted) {
        // Single resource: equalize allocations x_j f_j; otherwise grow rates
        // uniformly.
        std::vector<double> dir(poly.jobs.size(), 1.0);
        if (view.capacities().size() == 1) {
            for (size_t j = 0; j < poly.jobs.size(); ++j) {
                double f = 0;
                for (const JobView& v : view.alive())
                    if (v.id == poly.jobs[j]) f = v.payload[0];
                dir[j] = f > 0 ? 1.0 / f : 0.0;
            }
        }
        dec.rates = progressive_fill(poly, dir);
        return dec;
    }

    dec.rates = water_fill_lifted(poly);
    std::vector<double> z = feasibility_witness(poly, dec.rates, 1e-7);
    for (int c = 0; c < poly.cols && !z.empty(); ++c) {
        if (z[static_cast<size_t>(c)] <= 1e-12) continue;
        const auto& col = poly.columns[static_cast<size_t>(c)];
        dec.shares.push_back({col.job, col.machine, col.set_index, z[static_cast<size_t>(c)]});
    }
    return dec;
}

SchedulerDecision drf_allocate(const SchedulerView& view) {
    if (view.family() != Family::multidim)
        throw ValidationError("drf_allocate: multidim family only");
    if (view.alive().empty()) throw ValidationError("drf_allocate: no alive jobs");
    PackingPolytope poly = view.build_alive_polytope();

    // Dominant share of j grows at unit speed: dx_j/dtheta = 1 / g_j with
    // g_j = max_d f_jd / R_d.
    std::vector<double> dir(poly.jobs.size(), 0.0);
    for (size_t j = 0; j < poly.jobs.size(); ++j) {
        const JobView* v = nullptr;
        for (const JobView& a : view.alive())
            if (a.id == poly.jobs[j]) v = &a;
        double g = 0;
        for (size_t d = 0; d < view.capacities().size(); ++d)
            g = std::max(g, v->payload[d] / view.capacities()[d]);
        dir[j] = 1.0 / g;
    }
    SchedulerDecision dec;
    dec.rates = progressive_fill(poly, dir);
    return dec;
}

SchedulerDecision PfScheduler::decide(const SchedulerView& view) {
    return pf_allocate(view, tol_);
}

SchedulerDecision MaxMinScheduler::decide(const SchedulerView& view) {
    return maxmin_allocate(view);
}

SchedulerDecision DrfScheduler::decide(const SchedulerView& view) {
    return drf_allocate(view);
}

std::unique_ptr<Scheduler> make_scheduler(const std::string& name, double blass_epsilon) {
    if (name == "pf") return std::make_unique<PfScheduler>();
    if (name == "maxmin") return std::make_unique<MaxMinScheduler>();
    if (name == "drf") return std::make_unique<DrfScheduler>();
    if (name == "blass") return std::make_unique<BlassScheduler>(BlassConfig{blass_epsilon});
    throw ValidationError("unknown scheduler '" + name + "'");
}

}  // namespace polysched
