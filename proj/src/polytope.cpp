#include "polysched/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "polysched/linprog.hpp"

namespace polysched {

std::string to_string(const RowKey& k) {
    switch (k.kind) {
        case RowKind::resource: return "resource[" + std::to_string(k.ref) + "]";
        case RowKind::singleton: return "singleton[job " + std::to_string(k.ref) + "]";
        case RowKind::machine: return "machine[" + std::to_string(k.ref) + "]";
        case RowKind::job_cap: return "job_cap[job " + std::to_string(k.ref) + "]";
        case RowKind::simplex: return "simplex";
    }
    return "?";
}

int PackingPolytope::job_pos(JobId id) const {
    auto it = std::lower_bound(jobs.begin(), jobs.end(), id);
    if (it == jobs.end() || *it != id)
        throw ValidationError("job " + std::to_string(id) + " is not in this polytope");
    return static_cast<int>(it - jobs.begin());
}

std::vector<std::pair<int, double>> PackingPolytope::direct_column(JobId id) const {
    if (lifted) throw Error("direct_column on a lifted polytope");
    int pos = job_pos(id);
    std::vector<std::pair<int, double>> out;
    for (size_t r = 0; r < h_rows.size(); ++r)
        for (const auto& [col, coeff] : h_rows[r].terms)
            if (col == pos && coeff != 0.0) out.emplace_back(static_cast<int>(r), coeff);
    return out;
}

double PackingPolytope::eval_row(const HRow& row, const std::vector<double>& z) const {
    double s = 0;
    for (const auto& [col, coeff] : row.terms) s += coeff * z[static_cast<size_t>(col)];
    return s;
}

std::vector<double> PackingPolytope::rates_from_z(const std::vector<double>& z) const {
    std::vector<double> x(jobs.size(), 0.0);
    for (size_t j = 0; j < q_rows.size(); ++j)
        for (const auto& [col, coeff] : q_rows[j])
            x[j] += coeff * z[static_cast<size_t>(col)];
    return x;
}

namespace {

void keep_maximal_sets(std::vector<std::vector<JobId>>& sets) {
    // Drop the empty set and any set strictly contained in another; only the
    // maximal feasible subsets matter for the polytope.
    std::vector<std::vector<JobId>> out;
    for (const auto& s : sets) {
        if (s.empty()) continue;
        bool dominated = false;
        for (const auto& t : sets) {
            if (t.size() <= s.size()) continue;
            if (std::includes(t.begin(), t.end(), s.begin(), s.end())) {
                dominated = true;
                break;
            }
        }
        if (!dominated) out.push_back(s);
    }
    sets = std::move(out);
}

}  // namespace

PackingPolytope build_polytope(const Instance& inst, const std::vector<JobId>& alive) {
    PackingPolytope p;
    p.family = inst.family;
    p.lifted = is_lifted_family(inst.family);
    p.jobs = alive;
    std::sort(p.jobs.begin(), p.jobs.end());
    const int n = static_cast<int>(p.jobs.size());

    std::vector<const Job*> js;
    js.reserve(static_cast<size_t>(n));
    for (JobId id : p.jobs) js.push_back(&inst.job(id));

    if (!p.lifted) {
        // Direct rows over x: one normalized row per resource (f_jd / R_d)
        // plus one singleton row x_j <= 1 per job.
        p.cols = n;
        p.columns.resize(static_cast<size_t>(n));
        p.q_rows.resize(static_cast<size_t>(n));
        for (int j = 0; j < n; ++j) p.q_rows[static_cast<size_t>(j)] = {{j, 1.0}};

        const int D = static_cast<int>(inst.capacities.size());
        for (int d = 0; d < D; ++d) {
            PackingPolytope::HRow row;
            row.key = {RowKind::resource, d};
            for (int j = 0; j < n; ++j) {
                double f = js[static_cast<size_t>(j)]->payload[static_cast<size_t>(d)];
                if (f > 0) row.terms.emplace_back(j, f / inst.capacities[static_cast<size_t>(d)]);
            }
            p.h_rows.push_back(std::move(row));
        }
        for (int j = 0; j < n; ++j) {
            PackingPolytope::HRow row;
            row.key = {RowKind::singleton, p.jobs[static_cast<size_t>(j)]};
            row.terms.emplace_back(j, 1.0);
            p.h_rows.push_back(std::move(row));
        }
        // The singleton row guarantees a positive column entry, but a job
        // with an all-zero demand vector was already rejected at validation.
        return p;
    }

    p.q_rows.resize(static_cast<size_t>(n));
    switch (inst.family) {
        case Family::unrelated:
        case Family::tree_lb: {
            const int M = inst.machines;
            // Columns z_ij for s_ij > 0 only.
            std::vector<std::vector<int>> machine_cols(static_cast<size_t>(M));
            for (int j = 0; j < n; ++j) {
                bool any = false;
                for (int i = 0; i < M; ++i) {
                    double s = js[static_cast<size_t>(j)]->payload[static_cast<size_t>(i)];
                    if (s <= 0) continue;
                    int c = p.cols++;
                    p.columns.push_back({i, p.jobs[static_cast<size_t>(j)], -1});
                    p.q_rows[static_cast<size_t>(j)].emplace_back(c, s);
                    machine_cols[static_cast<size_t>(i)].push_back(c);
                    any = true;
                }
                if (!any)
                    throw ValidationError("job " + std::to_string(p.jobs[static_cast<size_t>(j)]) +
                                          " has an all-zero column (unprocessable)");
            }
            for (int i = 0; i < M; ++i) {
                if (machine_cols[static_cast<size_t>(i)].empty()) continue;
                PackingPolytope::HRow row;
                row.key = {RowKind::machine, i};
                for (int c : machine_cols[static_cast<size_t>(i)]) row.terms.emplace_back(c, 1.0);
                p.h_rows.push_back(std::move(row));
            }
            for (int j = 0; j < n; ++j) {
                PackingPolytope::HRow row;
                row.key = {RowKind::job_cap, p.jobs[static_cast<size_t>(j)]};
                for (const auto& [c, coeff] : p.q_rows[static_cast<size_t>(j)])
                    row.terms.emplace_back(c, 1.0);
                p.h_rows.push_back(std::move(row));
            }
            break;
        }
        case Family::broadcast: {
            const int M = inst.machines;
            p.cols = M;
            for (int i = 0; i < M; ++i) p.columns.push_back({i, -1, -1});
            for (int j = 0; j < n; ++j) {
                bool any = false;
                for (int i = 0; i < M; ++i) {
                    double s = js[static_cast<size_t>(j)]->payload[static_cast<size_t>(i)];
                    if (s > 0) {
                        p.q_rows[static_cast<size_t>(j)].emplace_back(i, s);
                        any = true;
                    }
                }
                if (!any)
                    throw ValidationError("job " + std::to_string(p.jobs[static_cast<size_t>(j)]) +
                                          " has an all-zero column (unprocessable)");
            }
            PackingPolytope::HRow row;
            row.key = {RowKind::simplex, 0};
            for (int i = 0; i < M; ++i) row.terms.emplace_back(i, 1.0);
            p.h_rows.push_back(std::move(row));
            break;
        }
        case Family::all_or_nothing: {
            // Columns are the maximal feasible subsets restricted to alive jobs.
            std::vector<std::vector<JobId>> sets;
            for (const auto& s : inst.feasible_sets) {
                std::vector<JobId> r;
                for (JobId id : s)
                    if (std::binary_search(p.jobs.begin(), p.jobs.end(), id)) r.push_back(id);
                if (!r.empty()) sets.push_back(std::move(r));
            }
            std::sort(sets.begin(), sets.end());
            sets.erase(std::unique(sets.begin(), sets.end()), sets.end());
            keep_maximal_sets(sets);
            p.column_sets = sets;
            p.cols = static_cast<int>(sets.size());
            for (int c = 0; c < p.cols; ++c) p.columns.push_back({-1, -1, c});
            for (int c = 0; c < p.cols; ++c)
                for (JobId id : sets[static_cast<size_t>(c)])
                    p.q_rows[static_cast<size_t>(p.job_pos(id))].emplace_back(c, 1.0);
            for (int j = 0; j < n; ++j)
                if (p.q_rows[static_cast<size_t>(j)].empty())
                    throw ValidationError("job " + std::to_string(p.jobs[static_cast<size_t>(j)]) +
                                          " appears in no feasible set (unprocessable)");
            PackingPolytope::HRow row;
            row.key = {RowKind::simplex, 0};
            for (int c = 0; c < p.cols; ++c) row.terms.emplace_back(c, 1.0);
            p.h_rows.push_back(std::move(row));
            break;
        }
        case Family::multidim:
            break;  // handled above
    }
    return p;
}

namespace {

// max t  s.t.  [Q z]_j - t x_j >= 0, H z <= 1, z >= 0, t >= 0.
// Variables (z, t); rewritten as rows t x_j - [Q z]_j <= 0 with b = 0.
LpResult scaling_lp(const PackingPolytope& p, const std::vector<double>& x) {
    const int nz = p.cols;
    const int nv = nz + 1;
    std::vector<std::vector<double>> A;
    std::vector<double> b;
    for (const auto& row : p.h_rows) {
        std::vector<double> a(static_cast<size_t>(nv), 0.0);
        for (const auto& [c, coeff] : row.terms) a[static_cast<size_t>(c)] = coeff;
        A.push_back(std::move(a));
        b.push_back(1.0);
    }
    for (size_t j = 0; j < p.jobs.size(); ++j) {
        if (x[j] <= 0) continue;  // zero-rate jobs impose nothing
        std::vector<double> a(static_cast<size_t>(nv), 0.0);
        for (const auto& [c, coeff] : p.q_rows[j]) a[static_cast<size_t>(c)] = -coeff;
        a[static_cast<size_t>(nz)] = x[j];
        A.push_back(std::move(a));
        b.push_back(0.0);
    }
    // Cap t so the LP is bounded even when x = 0.
    {
        std::vector<double> a(static_cast<size_t>(nv), 0.0);
        a[static_cast<size_t>(nz)] = 1.0;
        A.push_back(std::move(a));
        b.push_back(1e6);
    }
    std::vector<double> c(static_cast<size_t>(nv), 0.0);
    c[static_cast<size_t>(nz)] = 1.0;
    return solve_lp_max(A, b, c);
}

}  // namespace

FeasibilityReport check_feasible(const PackingPolytope& p,
                                 const std::map<JobId, double>& x, double tol) {
    std::vector<double> xv(p.jobs.size(), 0.0);
    for (const auto& [id, v] : x) {
        if (v < -tol) throw ValidationError("rates must be nonnegative");
        xv[static_cast<size_t>(p.job_pos(id))] = std::max(0.0, v);
    }

    FeasibilityReport rep;
    rep.tol = tol;
    if (!p.lifted) {
        rep.max_violation = 0;
        for (const auto& row : p.h_rows) {
            double v = p.eval_row(row, xv) - 1.0;
            if (v > rep.max_violation) rep.max_violation = v;
            if (v > tol) rep.violated_rows.push_back(row.key);
        }
        rep.max_violation = std::max(0.0, rep.max_violation);
        rep.feasible = rep.max_violation <= tol;
        return rep;
    }

    bool all_zero = std::all_of(xv.begin(), xv.end(), [](double v) { return v == 0.0; });
    if (all_zero) {
        rep.feasible = true;
        return rep;
    }
    LpResult lp = scaling_lp(p, xv);
    double t = lp.objective;
    rep.max_violation = t >= 1.0 ? 0.0 : (t <= 1e-12 ? std::numeric_limits<double>::infinity()
                                                     : 1.0 / t - 1.0);
    rep.feasible = rep.max_violation <= tol;
    return rep;
}

std::vector<double> feasibility_witness(const PackingPolytope& p,
                                        const std::map<JobId, double>& x, double tol) {
    std::vector<double> xv(p.jobs.size(), 0.0);
    for (const auto& [id, v] : x) xv[static_cast<size_t>(p.job_pos(id))] = std::max(0.0, v);
    LpResult lp = scaling_lp(p, xv);
    if (lp.objective < 1.0 - tol) return {};
    lp.x.resize(static_cast<size_t>(p.cols));
    return lp.x;
}

}  // namespace polysched
