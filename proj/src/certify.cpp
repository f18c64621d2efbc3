#include "polysched/certify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "polysched/blass.hpp"

namespace polysched {

double weighted_median(std::span<const double> values, std::span<const double> weights) {
    if (values.empty() || values.size() != weights.size())
        throw ValidationError("weighted_median: empty or mismatched input");
    std::vector<size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return values[a] < values[b]; });
    double total = 0;
    for (double w : weights) {
        if (!(w > 0)) throw ValidationError("weighted_median: weights must be positive");
        total += w;
    }
    double run = 0;
    for (size_t idx : order) {
        run += weights[idx];
        if (run >= total / 2 - 1e-15 * total) return values[idx];
    }
    return values[order.back()];
}

bool SlottedTrace::claimable(size_t j, int l) const {
    double lo = static_cast<double>(l) * delta;
    double hi = lo + delta;
    const double tol = 1e-12 * std::max(1.0, hi);
    if (hi <= releases[j] + tol) return true;                       // before release
    return lo >= releases[j] - tol && hi <= completions[j] + tol;   // fully alive
}

int SlottedTrace::job_pos(JobId id) const {
    for (size_t j = 0; j < jobs.size(); ++j)
        if (jobs[j] == id) return static_cast<int>(j);
    throw ValidationError("slotted trace: unknown job " + std::to_string(id));
}

SlottedTrace slot_trace(const Trace& tr, double delta) {
    if (!tr.complete()) throw ValidationError("slot_trace: trace is incomplete");
    const Instance& inst = tr.instance;
    const size_t n = inst.jobs.size();

    double min_p = std::numeric_limits<double>::infinity();
    for (const Job& j : inst.jobs) min_p = std::min(min_p, j.size);
    double max_rate = 0;
    for (const TraceSegment& s : tr.segments)
        for (const auto& [id, x] : s.rates) max_rate = std::max(max_rate, x * tr.speed);
    double min_gap = std::numeric_limits<double>::infinity();
    for (size_t e = 1; e < tr.events.size(); ++e) {
        double g = tr.events[e].time - tr.events[e - 1].time;
        if (g > 1e-12) min_gap = std::min(min_gap, g);
    }
    if (!std::isfinite(min_gap)) min_gap = tr.makespan;

    if (delta <= 0) {
        // Baseline: every job spans >= 128 slots of work. Event gaps may
        // refine the grid, but only boundedly: near-coincident events would
        // otherwise explode it, and slot averages stay valid across event
        // boundaries anyway.
        double base = min_p / (128.0 * std::max(1.0, max_rate));
        delta = std::min(std::min(min_p, min_gap) / 128.0, base);
        delta = std::max(delta, base / 4.0);
        // Spanning precondition, re-checked: an explicit delta is the
        // caller's responsibility.
        if (min_p / (delta * std::max(max_rate, 1e-300)) < 100.0 - 1e-9)
            throw ValidationError("slot_trace: delta too coarse for the smallest job");
    }
    double slots_d = std::ceil(tr.makespan / delta - 1e-12);
    if (!(slots_d <= 2000000.0))
        throw ValidationError("slot_trace: grid would need " + std::to_string(slots_d) +
                              " slots; pass a coarser delta");
    int slots = static_cast<int>(slots_d);

    SlottedTrace st;
    st.delta = delta;
    st.slots = slots;
    st.lifted = is_lifted_family(inst.family);
    for (const Job& j : inst.jobs) {
        st.jobs.push_back(j.id);
        st.weights.push_back(j.weight);
        st.sizes.push_back(j.size);
        st.releases.push_back(j.release);
        st.completions.push_back(tr.completion.at(j.id));
    }
    st.q.assign(n, std::vector<double>(static_cast<size_t>(slots), 0.0));
    if (st.lifted) st.ubar.assign(n, std::vector<double>(static_cast<size_t>(slots), 0.0));

    std::map<RowKey, size_t> row_index;
    auto row_slot_values = std::vector<std::vector<double>>();

    for (const TraceSegment& seg : tr.segments) {
        int l0 = static_cast<int>(std::floor(seg.t0 / delta + 1e-12));
        int l1 = static_cast<int>(std::ceil(seg.t1 / delta - 1e-12));
        for (int l = std::max(0, l0); l < std::min(slots, l1); ++l) {
            double lo = std::max(seg.t0, l * delta);
            double hi = std::min(seg.t1, (l + 1) * delta);
            double len = hi - lo;
            if (len <= 0) continue;
            for (const auto& [id, x] : seg.rates) {
                if (x == 0) continue;
                st.q[static_cast<size_t>(st.job_pos(id))][static_cast<size_t>(l)] +=
                    len * x * tr.speed;
            }
            if (seg.has_duals) {
                for (const auto& [key, v] : seg.row_duals) {
                    auto [it, fresh] = row_index.try_emplace(key, row_slot_values.size());
                    if (fresh)
                        row_slot_values.emplace_back(static_cast<size_t>(slots), 0.0);
                    row_slot_values[it->second][static_cast<size_t>(l)] += len * v;
                }
                if (st.lifted)
                    for (const auto& [id, u] : seg.link_duals)
                        st.ubar[static_cast<size_t>(st.job_pos(id))][static_cast<size_t>(l)] +=
                            len * u;
            }
        }
    }

    st.row_keys.resize(row_index.size());
    st.ybar.resize(row_index.size());
    for (const auto& [key, idx] : row_index) {
        st.row_keys[idx] = key;
        st.ybar[idx] = std::move(row_slot_values[idx]);
        for (double& v : st.ybar[idx]) v /= delta;
    }
    if (st.lifted)
        for (auto& row : st.ubar)
            for (double& v : row) v /= delta;

    st.weight_unsatisfied.assign(static_cast<size_t>(slots), 0.0);
    for (int l = 0; l < slots; ++l)
        for (size_t j = 0; j < n; ++j)
            if (st.in_U(j, l)) st.weight_unsatisfied[static_cast<size_t>(l)] += st.weights[j];
    return st;
}

namespace {

// zeta_l: weighted median of q_jl / p_j over U_l (unreleased jobs count with
// q = 0, exactly as the construction demands).
std::vector<double> compute_zeta(const SlottedTrace& st) {
    std::vector<double> zeta(static_cast<size_t>(st.slots), 0.0);
    std::vector<double> vals, ws;
    for (int l = 0; l < st.slots; ++l) {
        vals.clear();
        ws.clear();
        for (size_t j = 0; j < st.jobs.size(); ++j) {
            if (!st.in_U(j, l)) continue;
            vals.push_back(st.q[j][static_cast<size_t>(l)] / st.sizes[j]);
            ws.push_back(st.weights[j]);
        }
        zeta[static_cast<size_t>(l)] = vals.empty() ? 0.0 : weighted_median(vals, ws);
    }
    return zeta;
}

bool alpha_claims(const SlottedTrace& st, const std::vector<double>& zeta, size_t j, int l) {
    if (!st.in_U(j, l) || !st.claimable(j, l)) return false;
    double ratio = st.q[j][static_cast<size_t>(l)] / st.sizes[j];
    return ratio <= zeta[static_cast<size_t>(l)] + 1e-12;
}

}  // namespace

CompletionDualCert completion_duals(const SlottedTrace& st, const Trace& tr, double s) {
    if (tr.speed != 1.0)
        throw ValidationError("completion_duals: certificates are defined for speed-1 traces");
    if (st.row_keys.empty())
        throw ValidationError("completion_duals: trace carries no per-segment duals");
    if (!(s >= 1)) throw ValidationError("completion_duals: s must be >= 1");

    CompletionDualCert cert;
    cert.s = s;
    cert.delta = st.delta;
    cert.lifted = st.lifted;
    cert.jobs = st.jobs;
    cert.row_keys = st.row_keys;
    cert.zeta = compute_zeta(st);

    const size_t n = st.jobs.size();
    cert.alpha.assign(n, 0.0);
    for (size_t j = 0; j < n; ++j)
        for (int l = 0; l < st.slots; ++l)
            if (alpha_claims(st, cert.zeta, j, l)) cert.alpha[j] += st.delta * st.weights[j];

    // Suffix sums in reverse slot order.
    cert.beta.assign(st.row_keys.size(), std::vector<double>(static_cast<size_t>(st.slots), 0.0));
    for (size_t r = 0; r < st.row_keys.size(); ++r) {
        double suffix = 0;
        for (int l = st.slots - 1; l >= 0; --l) {
            suffix += cert.zeta[static_cast<size_t>(l)] * st.ybar[r][static_cast<size_t>(l)];
            cert.beta[r][static_cast<size_t>(l)] = (st.delta / s) * suffix;
        }
    }
    if (st.lifted) {
        cert.gamma.assign(n, std::vector<double>(static_cast<size_t>(st.slots), 0.0));
        for (size_t j = 0; j < n; ++j) {
            double suffix = 0;
            for (int l = st.slots - 1; l >= 0; --l) {
                suffix += cert.zeta[static_cast<size_t>(l)] * st.ubar[j][static_cast<size_t>(l)];
                cert.gamma[j][static_cast<size_t>(l)] = suffix;
            }
        }
    }

    double sum_alpha = std::accumulate(cert.alpha.begin(), cert.alpha.end(), 0.0);
    double sum_beta = 0;
    for (const auto& row : cert.beta) sum_beta += std::accumulate(row.begin(), row.end(), 0.0);
    cert.dual_objective = sum_alpha - sum_beta;
    cert.lower_bound = cert.dual_objective / s;
    for (size_t j = 0; j < n; ++j)
        cert.alg_weighted_completion += st.weights[j] * st.completions[j];
    double wsum = std::accumulate(st.weights.begin(), st.weights.end(), 0.0);
    cert.slotting_error = 2.0 * st.delta * wsum;  // boundary slots not claimed
    return cert;
}

namespace {

void flag(CertCheckReport& rep, CertViolation v) {
    rep.ok = false;
    if (rep.violations.size() < 50) rep.violations.push_back(std::move(v));
}

bool off_by(double got, double want, double scale) {
    return std::abs(got - want) > 0.005 * std::abs(want) + 1e-9 * std::max(1.0, scale);
}

}  // namespace

CertCheckReport check_completion_cert(const CompletionDualCert& cert,
                                      const SlottedTrace& st, const Trace& tr) {
    CertCheckReport rep;
    const size_t n = st.jobs.size();
    const int T = st.slots;
    const double s = cert.s;
    const double delta = cert.delta;
    double wsum = std::accumulate(st.weights.begin(), st.weights.end(), 0.0);

    // Phase 1: the certificate must equal its own construction.
    CompletionDualCert fresh = completion_duals(st, tr, s);
    for (int l = 0; l < T; ++l)
        if (off_by(cert.zeta[static_cast<size_t>(l)], fresh.zeta[static_cast<size_t>(l)], 1.0))
            flag(rep, {"zeta mismatch vs construction", -1, l, -1,
                       cert.zeta[static_cast<size_t>(l)], fresh.zeta[static_cast<size_t>(l)]});
    for (size_t j = 0; j < n; ++j)
        if (off_by(cert.alpha[j], fresh.alpha[j], wsum))
            flag(rep, {"alpha mismatch vs construction", st.jobs[j], -1, -1, cert.alpha[j],
                       fresh.alpha[j]});
    for (size_t r = 0; r < cert.beta.size(); ++r)
        for (int l = 0; l < T; ++l)
            if (off_by(cert.beta[r][static_cast<size_t>(l)],
                       fresh.beta[r][static_cast<size_t>(l)], wsum * delta))
                flag(rep, {"beta mismatch vs construction", -1, l, static_cast<int>(r),
                           cert.beta[r][static_cast<size_t>(l)],
                           fresh.beta[r][static_cast<size_t>(l)]});
    if (cert.lifted)
        for (size_t j = 0; j < n; ++j)
            for (int l = 0; l < T; ++l)
                if (off_by(cert.gamma[j][static_cast<size_t>(l)],
                           fresh.gamma[j][static_cast<size_t>(l)], wsum))
                    flag(rep, {"gamma mismatch vs construction", st.jobs[j], l, -1,
                               cert.gamma[j][static_cast<size_t>(l)],
                               fresh.gamma[j][static_cast<size_t>(l)]});

    // Nonnegativity.
    for (size_t j = 0; j < n; ++j)
        if (cert.alpha[j] < 0) flag(rep, {"alpha negative", st.jobs[j], -1, -1, cert.alpha[j], 0});
    for (size_t r = 0; r < cert.beta.size(); ++r)
        for (int l = 0; l < T; ++l)
            if (cert.beta[r][static_cast<size_t>(l)] < 0)
                flag(rep, {"beta negative", -1, l, static_cast<int>(r),
                           cert.beta[r][static_cast<size_t>(l)], 0});

    // Phase 2: the DUAL_s constraint for every job and slot with t >= r_j.
    const double tol = 1e-7 * std::max(1.0, wsum);
    if (!cert.lifted) {
        // Column prices B_.j . beta_l via the instance's demand rows; polytope
        // rows are mapped onto certificate rows by key once.
        PackingPolytope poly = build_polytope(tr.instance, st.jobs);
        std::vector<int> row_map(poly.h_rows.size(), -1);
        for (size_t r = 0; r < poly.h_rows.size(); ++r)
            for (size_t cr = 0; cr < cert.row_keys.size(); ++cr)
                if (cert.row_keys[cr] == poly.h_rows[r].key) row_map[r] = static_cast<int>(cr);
        for (size_t j = 0; j < n; ++j) {
            std::vector<std::pair<int, double>> col;  // (cert row, coeff)
            for (const auto& [row, coeff] : poly.direct_column(st.jobs[j]))
                if (row_map[static_cast<size_t>(row)] >= 0)
                    col.emplace_back(row_map[static_cast<size_t>(row)], coeff);
            for (int l = 0; l < T; ++l) {
                if (static_cast<double>(l) * delta < st.releases[j] - 1e-12) continue;
                double price = 0;
                for (const auto& [r, coeff] : col)
                    price += coeff * cert.beta[static_cast<size_t>(r)][static_cast<size_t>(l)];
                double lhs = cert.alpha[j] / st.sizes[j] - (s / delta) * price;
                double rhs = st.weights[j] * (static_cast<double>(l) * delta) / st.sizes[j];
                rep.max_constraint_residual =
                    std::max(rep.max_constraint_residual, lhs - rhs);
                if (lhs > rhs + tol)
                    flag(rep, {"dual constraint violated", st.jobs[j], l, -1, lhs, rhs});
            }
        }
    } else {
        // x-rows: alpha_j/p_j - gamma_jl <= w_j t_l / p_j.
        for (size_t j = 0; j < n; ++j) {
            for (int l = 0; l < T; ++l) {
                if (static_cast<double>(l) * delta < st.releases[j] - 1e-12) continue;
                double lhs = cert.alpha[j] / st.sizes[j] - cert.gamma[j][static_cast<size_t>(l)];
                double rhs = st.weights[j] * (static_cast<double>(l) * delta) / st.sizes[j];
                rep.max_constraint_residual =
                    std::max(rep.max_constraint_residual, lhs - rhs);
                if (lhs > rhs + tol)
                    flag(rep, {"dual x-row constraint violated", st.jobs[j], l, -1, lhs, rhs});
            }
        }
        // z-columns: [Q^T gamma]_c <= (s/delta) [H^T beta]_c, per slot.
        PackingPolytope poly = build_polytope(tr.instance, st.jobs);
        std::vector<int> row_map(poly.h_rows.size(), -1);
        for (size_t r = 0; r < poly.h_rows.size(); ++r)
            for (size_t cr = 0; cr < cert.row_keys.size(); ++cr)
                if (cert.row_keys[cr] == poly.h_rows[r].key) row_map[r] = static_cast<int>(cr);
        for (int c = 0; c < poly.cols; ++c) {
            std::vector<std::pair<size_t, double>> q_terms;  // (job pos, coeff)
            for (size_t j = 0; j < poly.jobs.size(); ++j)
                for (const auto& [cc, coeff] : poly.q_rows[j])
                    if (cc == c) q_terms.emplace_back(static_cast<size_t>(st.job_pos(poly.jobs[j])), coeff);
            std::vector<std::pair<int, double>> h_terms;  // (cert row, coeff)
            for (size_t r = 0; r < poly.h_rows.size(); ++r)
                for (const auto& [cc, coeff] : poly.h_rows[r].terms)
                    if (cc == c && row_map[r] >= 0) h_terms.emplace_back(row_map[r], coeff);
            for (int l = 0; l < T; ++l) {
                double lhs = 0;
                for (const auto& [j, coeff] : q_terms)
                    lhs += coeff * cert.gamma[j][static_cast<size_t>(l)];
                double rhs = 0;
                for (const auto& [r, coeff] : h_terms)
                    rhs += coeff * (s / delta) * cert.beta[static_cast<size_t>(r)][static_cast<size_t>(l)];
                rep.max_constraint_residual =
                    std::max(rep.max_constraint_residual, lhs - rhs);
                if (lhs > rhs + tol)
                    flag(rep, {"dual z-column constraint violated", -1, l, c, lhs, rhs});
            }
        }
    }
    // Tail (beta = 0 beyond the horizon): alpha_j <= w_j * T * delta.
    for (size_t j = 0; j < n; ++j)
        if (cert.alpha[j] > st.weights[j] * T * delta + tol)
            flag(rep, {"alpha exceeds horizon bound", st.jobs[j], T, -1, cert.alpha[j],
                       st.weights[j] * T * delta});

    // Phase 3: objective-side lemmas.
    double alg = cert.alg_weighted_completion;
    double sum_alpha = std::accumulate(cert.alpha.begin(), cert.alpha.end(), 0.0);
    rep.lemma_alpha_ok = sum_alpha >= 0.5 * alg - cert.slotting_error - tol;
    if (!rep.lemma_alpha_ok)
        flag(rep, {"sum alpha below half the weighted completion time", -1, -1, -1, sum_alpha,
                   0.5 * alg});
    for (int l = 0; l < T; ++l) {
        double mass = 0;
        for (const auto& row : cert.beta) mass += row[static_cast<size_t>(l)];
        double cap = (8.0 / s) * delta * st.weight_unsatisfied[static_cast<size_t>(l)];
        if (mass > cap + tol * delta) {
            rep.lemma_beta_ok = false;
            flag(rep, {"per-slot beta mass exceeds (8/s) delta W", -1, l, -1, mass, cap});
        }
    }

    rep.dual_objective = cert.dual_objective;
    rep.lower_bound = cert.lower_bound;
    rep.alg_objective = alg;
    rep.certified_ratio = cert.lower_bound > 0
                              ? alg / cert.lower_bound
                              : std::numeric_limits<double>::infinity();
    std::ostringstream os;
    os << (rep.ok ? "PASS" : "FAIL") << " completion cert s=" << s
       << " dual=" << rep.dual_objective << " alg=" << alg
       << " bound=" << rep.lower_bound << " ratio<=" << rep.certified_ratio
       << " max_resid=" << rep.max_constraint_residual;
    rep.summary = os.str();
    return rep;
}

// ---------------------------------------------------------------------------
// BLASS flow-time certificate
// ---------------------------------------------------------------------------

namespace {

struct BlassSegmentState {
    // Per segment: machine of each alive job and its SLAPS share.
    std::map<JobId, int> machine;
    std::map<JobId, double> share;  // eta-free
    std::vector<int> count;         // N_i per machine
};

BlassSegmentState segment_state(const TraceSegment& seg, int machines) {
    BlassSegmentState s;
    s.count.assign(static_cast<size_t>(machines), 0);
    for (const AssignmentShare& a : seg.shares) {
        s.machine[a.job] = a.machine;
        s.share[a.job] = a.share;
        s.count[static_cast<size_t>(a.machine)] += 1;
    }
    return s;
}

}  // namespace

UnrelatedDualCert blass_duals(const Trace& tr, double epsilon) {
    if (tr.scheduler != "blass")
        throw ValidationError("blass_duals: trace was not produced by blass");
    if (!tr.complete()) throw ValidationError("blass_duals: incomplete trace");
    BlassConfig cfg{epsilon};
    cfg.validate();
    if (std::abs(tr.speed - cfg.eta()) > 1e-9)
        throw ValidationError("blass_duals: trace speed does not match eta = 1 + 3*epsilon");

    UnrelatedDualCert cert;
    cert.epsilon = epsilon;
    cert.k = cfg.k();
    cert.eta = cfg.eta();

    const Instance& inst = tr.instance;
    const int M = inst.machines;
    std::map<JobId, int> rank;
    for (const Job& j : inst.jobs) {
        cert.jobs.push_back(j.id);
        rank[j.id] = inst.global_rank(j.id);
    }
    const size_t n = cert.jobs.size();
    cert.delta_j.assign(n, 0.0);
    cert.beta.reserve(tr.segments.size());

    for (const TraceSegment& seg : tr.segments) {
        BlassSegmentState s = segment_state(seg, M);
        double len = seg.t1 - seg.t0;
        // dDelta_j/dt = nu0_j * N_<=j + sum of earlier-rank co-located nu0.
        for (size_t j = 0; j < n; ++j) {
            JobId id = cert.jobs[j];
            auto it = s.machine.find(id);
            if (it == s.machine.end()) continue;
            int m = it->second;
            int n_le = 1;
            double earlier_share = 0;
            for (const auto& [other, om] : s.machine) {
                if (other == id || om != m) continue;
                if (rank[other] < rank[id]) {
                    ++n_le;
                    earlier_share += s.share[other];
                }
            }
            cert.delta_j[j] += len * (s.share[id] * n_le + earlier_share);
        }
        std::vector<double> beta_seg(static_cast<size_t>(M), 0.0);
        for (int i = 0; i < M; ++i) {
            beta_seg[static_cast<size_t>(i)] =
                static_cast<double>(s.count[static_cast<size_t>(i)]) / (cert.k + 3.0);
            cert.beta_integral += len * beta_seg[static_cast<size_t>(i)];
        }
        cert.beta.push_back(std::move(beta_seg));
    }

    cert.alpha.assign(n, 0.0);
    for (size_t j = 0; j < n; ++j) {
        cert.alpha[j] = cert.delta_j[j] / (cert.k + 2.0);
        cert.sum_delta += cert.delta_j[j];
        cert.total_flow += tr.completion.at(cert.jobs[j]) - inst.job(cert.jobs[j]).release;
    }
    cert.dual_objective =
        std::accumulate(cert.alpha.begin(), cert.alpha.end(), 0.0) - cert.beta_integral;
    return cert;
}

CertCheckReport check_blass_cert(const UnrelatedDualCert& cert, const Trace& tr) {
    CertCheckReport rep;
    const Instance& inst = tr.instance;
    const size_t n = cert.jobs.size();
    const int M = inst.machines;
    const int k = cert.k;
    const double eta = cert.eta;
    const double eps = cert.epsilon;

    // Phase 1: reconstruction.
    UnrelatedDualCert fresh = blass_duals(tr, cert.epsilon);
    for (size_t j = 0; j < n; ++j) {
        if (off_by(cert.delta_j[j], fresh.delta_j[j], fresh.total_flow))
            flag(rep, {"Delta mismatch vs construction", cert.jobs[j], -1, -1,
                       cert.delta_j[j], fresh.delta_j[j]});
        if (off_by(cert.alpha[j], fresh.alpha[j], fresh.total_flow))
            flag(rep, {"alpha mismatch vs construction", cert.jobs[j], -1, -1, cert.alpha[j],
                       fresh.alpha[j]});
    }
    for (size_t sgi = 0; sgi < cert.beta.size(); ++sgi)
        for (int i = 0; i < M; ++i)
            if (off_by(cert.beta[sgi][static_cast<size_t>(i)],
                       fresh.beta[sgi][static_cast<size_t>(i)], 1.0))
                flag(rep, {"beta mismatch vs construction", -1, static_cast<int>(sgi), i,
                           cert.beta[sgi][static_cast<size_t>(i)],
                           fresh.beta[sgi][static_cast<size_t>(i)]});

    // Identities: sum Delta = sum F and the exact dual-objective value.
    double rel = std::abs(cert.sum_delta - cert.total_flow) / std::max(1e-12, cert.total_flow);
    if (rel > 1e-6)
        flag(rep, {"sum Delta != sum F", -1, -1, -1, cert.sum_delta, cert.total_flow});
    double expected_obj = cert.total_flow * eps * eps / ((1 + 2 * eps) * (1 + 3 * eps));
    if (std::abs(cert.dual_objective - expected_obj) >
        1e-6 * std::max(1.0, std::abs(expected_obj)))
        flag(rep, {"dual objective off the closed form", -1, -1, -1, cert.dual_objective,
                   expected_obj});

    // Phase 2: LP dual constraints per (machine, job, segment start), plus the
    // horizon point where beta = 0. Within a segment N_i is constant and the
    // right side grows with t, so segment starts dominate.
    const double tol = 1e-7;
    auto constraint = [&](size_t j, int i, double t, double beta_it) {
        const Job& job = inst.job(cert.jobs[j]);
        double sij = job.payload[static_cast<size_t>(i)];
        double lhs = sij * cert.alpha[j] / job.size - beta_it;
        double rhs = sij * (t - job.release) / job.size + 1.0;
        rep.max_constraint_residual = std::max(rep.max_constraint_residual, lhs - rhs);
        if (lhs > rhs + tol)
            flag(rep, {"LP dual constraint violated", cert.jobs[j], -1, i, lhs, rhs});
    };
    for (size_t sgi = 0; sgi < tr.segments.size(); ++sgi) {
        double t0 = tr.segments[sgi].t0;
        for (size_t j = 0; j < n; ++j) {
            if (t0 < inst.job(cert.jobs[j]).release - 1e-12) continue;
            for (int i = 0; i < M; ++i)
                constraint(j, i, std::max(t0, inst.job(cert.jobs[j]).release), cert.beta[sgi][static_cast<size_t>(i)]);
        }
        // Idle gap after this segment: no jobs alive, so beta_it = 0 there.
        double gap_end = sgi + 1 < tr.segments.size() ? tr.segments[sgi + 1].t0
                                                      : tr.makespan;
        if (gap_end > tr.segments[sgi].t1 + 1e-12) {
            for (size_t j = 0; j < n; ++j) {
                if (tr.segments[sgi].t1 < inst.job(cert.jobs[j]).release - 1e-12) continue;
                for (int i = 0; i < M; ++i) constraint(j, i, tr.segments[sgi].t1, 0.0);
            }
        }
    }
    for (size_t j = 0; j < n; ++j)
        for (int i = 0; i < M; ++i) constraint(j, i, tr.makespan, 0.0);

    // Residual-delay lemmas at every segment start. Delta_j(t*, C_j) and
    // p_j(t*) come from suffix integrals of the same trace quantities.
    std::vector<double> suffix_delta(n, 0.0);
    std::map<JobId, int> rank;
    for (const Job& j : inst.jobs) rank[j.id] = inst.global_rank(j.id);
    for (size_t sgi = tr.segments.size(); sgi-- > 0;) {
        const TraceSegment& seg = tr.segments[sgi];
        BlassSegmentState s = segment_state(seg, M);
        double len = seg.t1 - seg.t0;
        for (size_t j = 0; j < n; ++j) {
            JobId id = cert.jobs[j];
            auto it = s.machine.find(id);
            if (it == s.machine.end()) continue;
            int m = it->second;
            int n_le = 1;
            double earlier_share = 0;
            for (const auto& [other, om] : s.machine) {
                if (other == id || om != m) continue;
                if (rank[other] < rank[id]) {
                    ++n_le;
                    earlier_share += s.share[other];
                }
            }
            suffix_delta[j] += len * (s.share[id] * n_le + earlier_share);
            // At this segment's start: check both lemma bounds.
            double t_star = seg.t0;
            const Job& job = inst.job(id);
            double p_res = job.size - tr.processed(id, t_star);
            double sij = job.payload[static_cast<size_t>(m)];
            int n_less = n_le - 1;
            double L = sij / (n_less + 1);
            double cap46 = (1.0 / eta) * ((k + 2.0) / (k + 1.0)) * p_res / L;
            if (suffix_delta[j] > cap46 + 1e-6 * std::max(1.0, cap46))
                flag(rep, {"residual-delay bound violated", id, static_cast<int>(sgi), m,
                           suffix_delta[j], cap46});
            double cap47 = (k + 2.0) * (t_star - job.release) + cap46;
            if (cert.delta_j[j] > cap47 + 1e-6 * std::max(1.0, cap47))
                flag(rep, {"total-delay bound violated", id, static_cast<int>(sgi), m,
                           cert.delta_j[j], cap47});
        }
    }

    rep.dual_objective = cert.dual_objective;
    rep.lower_bound = cert.dual_objective;  // LP_dual feasible => <= OPT_LP
    rep.alg_objective = cert.total_flow;
    rep.certified_ratio = cert.dual_objective > 0
                              ? cert.total_flow / cert.dual_objective
                              : std::numeric_limits<double>::infinity();
    std::ostringstream os;
    os << (rep.ok ? "PASS" : "FAIL") << " blass cert eps=" << eps
       << " dual=" << rep.dual_objective << " sumF=" << cert.total_flow
       << " ratio<=" << rep.certified_ratio
       << " max_resid=" << rep.max_constraint_residual;
    rep.summary = os.str();
    return rep;
}

// ---------------------------------------------------------------------------
// Offline oracles
// ---------------------------------------------------------------------------

double smith_opt(const Instance& inst) {
    if (inst.family != Family::multidim || inst.capacities.size() != 1)
        throw ValidationError("smith_opt: single-resource instance required");
    for (const Job& j : inst.jobs) {
        if (j.release != 0) throw ValidationError("smith_opt: all releases must be 0");
        if (std::abs(j.payload[0] - inst.capacities[0]) > 1e-12)
            throw ValidationError("smith_opt: unit demands required (f_j = R)");
    }
    std::vector<const Job*> order;
    for (const Job& j : inst.jobs) order.push_back(&j);
    std::sort(order.begin(), order.end(), [](const Job* a, const Job* b) {
        double ra = a->weight / a->size, rb = b->weight / b->size;
        if (ra != rb) return ra > rb;
        return a->id < b->id;
    });
    double t = 0, total = 0;
    for (const Job* j : order) {
        t += j->size;
        total += j->weight * t;
    }
    return total;
}

namespace {

struct DpKey {
    uint64_t state;
    int slot;
    bool operator==(const DpKey& o) const { return state == o.state && slot == o.slot; }
};
struct DpKeyHash {
    size_t operator()(const DpKey& k) const {
        return std::hash<uint64_t>()(k.state * 1000003ull + static_cast<uint64_t>(k.slot));
    }
};

}  // namespace

double brute_force_opt(const Instance& inst, OfflineObjective obj, double delta) {
    if (inst.family != Family::unrelated && inst.family != Family::tree_lb)
        throw ValidationError("brute_force_opt: unrelated family only");
    const int n = static_cast<int>(inst.jobs.size());
    const int M = inst.machines;
    if (n > 5) throw ValidationError("brute_force_opt: n <= 5");

    // Work in delta units; per-slot unit yields must be integral.
    std::vector<int> need(static_cast<size_t>(n));
    std::vector<std::vector<int>> yield(static_cast<size_t>(n),
                                        std::vector<int>(static_cast<size_t>(M)));
    int max_need = 0;
    for (int j = 0; j < n; ++j) {
        need[static_cast<size_t>(j)] =
            static_cast<int>(std::ceil(inst.jobs[static_cast<size_t>(j)].size / delta - 1e-9));
        max_need = std::max(max_need, need[static_cast<size_t>(j)]);
        bool can = false;
        for (int i = 0; i < M; ++i) {
            double u = inst.jobs[static_cast<size_t>(j)].payload[static_cast<size_t>(i)];
            yield[static_cast<size_t>(j)][static_cast<size_t>(i)] =
                static_cast<int>(std::floor(u + 1e-9));
            can |= yield[static_cast<size_t>(j)][static_cast<size_t>(i)] > 0;
        }
        if (!can)
            throw ValidationError("brute_force_opt: delta too coarse, a job makes no progress");
    }

    int horizon = static_cast<int>(std::ceil(
        (inst.jobs.back().release + static_cast<double>(n) * max_need * delta) / delta));
    if (horizon > 40) throw ValidationError("brute_force_opt: horizon/delta exceeds 40 slots");

    // Pack remaining units into a base-(max_need+1) key.
    uint64_t radix = static_cast<uint64_t>(max_need) + 1;
    auto encode = [&](const std::vector<int>& rem) {
        uint64_t s = 0;
        for (int j = n - 1; j >= 0; --j) s = s * radix + static_cast<uint64_t>(rem[static_cast<size_t>(j)]);
        return s;
    };

    // All injective partial assignments jobs -> machines.
    std::vector<std::vector<std::pair<int, int>>> assignments;  // (job, machine)
    std::vector<std::pair<int, int>> cur;
    std::vector<bool> used(static_cast<size_t>(M), false);
    std::function<void(int)> rec = [&](int j) {
        if (j == n) {
            assignments.push_back(cur);
            return;
        }
        rec(j + 1);  // job j idle
        for (int i = 0; i < M; ++i) {
            if (used[static_cast<size_t>(i)]) continue;
            if (yield[static_cast<size_t>(j)][static_cast<size_t>(i)] <= 0) continue;
            used[static_cast<size_t>(i)] = true;
            cur.emplace_back(j, i);
            rec(j + 1);
            cur.pop_back();
            used[static_cast<size_t>(i)] = false;
        }
    };
    rec(0);

    std::unordered_map<DpKey, double, DpKeyHash> memo;
    std::function<double(int, std::vector<int>&)> solve = [&](int slot,
                                                              std::vector<int>& rem) -> double {
        bool done = std::all_of(rem.begin(), rem.end(), [](int r) { return r == 0; });
        if (done) return 0.0;
        if (slot >= horizon) return std::numeric_limits<double>::infinity();
        DpKey key{encode(rem), slot};
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;

        double t0 = slot * delta, t1 = (slot + 1) * delta;
        double best = std::numeric_limits<double>::infinity();
        std::vector<int> next(static_cast<size_t>(n));
        for (const auto& asg : assignments) {
            next = rem;
            double cost = 0;
            bool useful = asg.empty();
            bool valid = true;
            for (const auto& [j, i] : asg) {
                if (rem[static_cast<size_t>(j)] == 0 ||
                    inst.jobs[static_cast<size_t>(j)].release > t0 + 1e-12) {
                    valid = false;
                    break;
                }
                useful = true;
                next[static_cast<size_t>(j)] = std::max(
                    0, rem[static_cast<size_t>(j)] - yield[static_cast<size_t>(j)][static_cast<size_t>(i)]);
                if (next[static_cast<size_t>(j)] == 0) {
                    const Job& job = inst.jobs[static_cast<size_t>(j)];
                    cost += obj == OfflineObjective::weighted_completion
                                ? job.weight * t1
                                : t1 - job.release;
                }
            }
            if (!valid || !useful) continue;
            double rest = solve(slot + 1, next);
            best = std::min(best, cost + rest);
        }
        {
            // Idle slot (waiting for releases).
            double rest = solve(slot + 1, rem);
            best = std::min(best, rest);
        }
        memo.emplace(key, best);
        return best;
    };

    std::vector<int> rem = need;
    double v = solve(0, rem);
    if (!std::isfinite(v)) throw ValidationError("brute_force_opt: horizon too short");
    return v;
}

std::string emit_completion_cert(const CompletionDualCert& cert, const CertCheckReport& rep) {
    nlohmann::json doc;
    doc["kind"] = "completion_dual_cert";
    doc["s"] = cert.s;
    doc["delta"] = cert.delta;
    doc["lifted"] = cert.lifted;
    doc["jobs"] = cert.jobs;
    doc["alpha"] = cert.alpha;
    doc["zeta"] = cert.zeta;
    doc["beta"] = cert.beta;
    if (cert.lifted) doc["gamma"] = cert.gamma;
    doc["dual_objective"] = cert.dual_objective;
    doc["lower_bound"] = cert.lower_bound;
    doc["alg_weighted_completion"] = cert.alg_weighted_completion;
    doc["slotting_error"] = cert.slotting_error;
    doc["check"] = {{"ok", rep.ok},
                    {"max_constraint_residual", rep.max_constraint_residual},
                    {"certified_ratio", rep.certified_ratio},
                    {"summary", rep.summary}};
    return doc.dump(2) + "\n";
}

std::string emit_blass_cert(const UnrelatedDualCert& cert, const CertCheckReport& rep) {
    nlohmann::json doc;
    doc["kind"] = "blass_dual_cert";
    doc["epsilon"] = cert.epsilon;
    doc["k"] = cert.k;
    doc["eta"] = cert.eta;
    doc["jobs"] = cert.jobs;
    doc["Delta"] = cert.delta_j;
    doc["alpha"] = cert.alpha;
    doc["beta_integral"] = cert.beta_integral;
    doc["dual_objective"] = cert.dual_objective;
    doc["total_flow"] = cert.total_flow;
    doc["check"] = {{"ok", rep.ok},
                    {"max_constraint_residual", rep.max_constraint_residual},
                    {"certified_ratio", rep.certified_ratio},
                    {"summary", rep.summary}};
    return doc.dump(2) + "\n";
}

}  // namespace polysched
