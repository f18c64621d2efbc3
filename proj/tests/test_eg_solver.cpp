#include <doctest.h>

#include <cmath>
#include <functional>

#include "polysched/eg_solver.hpp"
#include "polysched/instance.hpp"

using namespace polysched;

namespace {

Instance single_row(std::vector<double> weights) {
    Instance inst;
    inst.family = Family::multidim;
    inst.capacities = {1.0};
    for (size_t i = 0; i < weights.size(); ++i)
        inst.jobs.push_back({static_cast<JobId>(i + 1), weights[i], 1.0, 0.0, {1.0}});
    inst.validate();
    return inst;
}

std::map<JobId, double> weights_of(const Instance& inst) {
    std::map<JobId, double> w;
    for (const Job& j : inst.jobs) w[j.id] = j.weight;
    return w;
}

std::vector<JobId> ids_of(const Instance& inst) {
    std::vector<JobId> ids;
    for (const Job& j : inst.jobs) ids.push_back(j.id);
    return ids;
}

// Brute-force EG oracle for <= 3 variables: grid search over the feasible
// region. Independent of the solver path.
struct GridResult {
    std::vector<double> x;
    double objective;
};

GridResult grid_search_eg(const PackingPolytope& p, const std::vector<double>& w,
                          double step) {
    const size_t n = p.jobs.size();
    std::vector<double> best;
    double best_obj = -1e300;
    std::vector<double> x(n, step);
    auto feasible = [&] {
        for (const auto& row : p.h_rows) {
            double v = 0;
            for (const auto& [c, coeff] : row.terms) v += coeff * x[static_cast<size_t>(c)];
            if (v > 1.0 + 1e-12) return false;
        }
        return true;
    };
    std::function<void(size_t)> rec = [&](size_t j) {
        if (j == n) {
            if (!feasible()) return;
            double obj = 0;
            for (size_t i = 0; i < n; ++i) obj += w[i] * std::log(x[i]);
            if (obj > best_obj) {
                best_obj = obj;
                best = x;
            }
            return;
        }
        for (double v = step; v <= 1.0 + 1e-12; v += step) {
            x[j] = v;
            rec(j + 1);
        }
    };
    rec(0);
    return {best, best_obj};
}

}  // namespace

TEST_CASE("single capacity row: closed-form shares") {
    // Equal weights: x = (1/2, 1/2) with the row dual at sum of weights.
    Instance inst = single_row({1.0, 1.0});
    PackingPolytope p = build_polytope(inst, ids_of(inst));
    Allocation a = solve_eg(p, weights_of(inst));
    CHECK(a.rates[1] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(a.rates[2] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(a.row_duals[0] == doctest::Approx(2.0).epsilon(1e-7));

    // Weights (1, 3): x = (1/4, 3/4), dual 4.
    Instance inst2 = single_row({1.0, 3.0});
    PackingPolytope p2 = build_polytope(inst2, ids_of(inst2));
    Allocation a2 = solve_eg(p2, weights_of(inst2));
    CHECK(a2.rates[1] == doctest::Approx(0.25).epsilon(1e-8));
    CHECK(a2.rates[2] == doctest::Approx(0.75).epsilon(1e-8));
    CHECK(a2.row_duals[0] == doctest::Approx(4.0).epsilon(1e-7));
}

TEST_CASE("single-row instances return x_j = w_j / sum w exactly") {
    for (uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        Rng rng(seed);
        int n = 2 + static_cast<int>(seed) % 7;
        std::vector<double> w;
        double wsum = 0;
        for (int i = 0; i < n; ++i) {
            w.push_back(rng.uniform(0.25, 4.0));
            wsum += w.back();
        }
        Instance inst = single_row(w);
        PackingPolytope p = build_polytope(inst, ids_of(inst));
        Allocation a = solve_eg(p, weights_of(inst));
        for (int i = 0; i < n; ++i)
            CHECK(a.rates[i + 1] ==
                  doctest::Approx(w[static_cast<size_t>(i)] / wsum).epsilon(1e-8));
    }
}

TEST_CASE("two-resource instance matches the grid-search oracle") {
    Instance inst;
    inst.family = Family::multidim;
    inst.capacities = {1.0, 1.0};
    inst.jobs = {{1, 1, 1, 0, {1.0, 0.2}}, {2, 1, 1, 0, {0.2, 1.0}}};
    inst.validate();
    PackingPolytope p = build_polytope(inst, ids_of(inst));
    Allocation a = solve_eg(p, weights_of(inst));

    GridResult grid = grid_search_eg(p, {1.0, 1.0}, 1e-3);
    CHECK(a.objective >= grid.objective - 1e-4);
    CHECK(a.rates[1] == doctest::Approx(grid.x[0]).epsilon(2e-3));
    CHECK(a.rates[2] == doctest::Approx(grid.x[1]).epsilon(2e-3));
    // The symmetric optimum is x = 1/1.2 on both coordinates.
    CHECK(a.rates[1] == doctest::Approx(1.0 / 1.2).epsilon(1e-8));
    CHECK(kkt_residuals(p, weights_of(inst), a).certified());
}

TEST_CASE("objective dominates the grid optimum on small instances") {
    GenParams gp;
    gp.n = 3;
    gp.m = 2;
    for (uint64_t seed : {1ull, 5ull, 9ull}) {
        Instance inst = gen_family(Family::multidim, gp, seed);
        PackingPolytope p = build_polytope(inst, ids_of(inst));
        std::vector<double> w;
        for (const Job& j : inst.jobs) w.push_back(j.weight);
        Allocation a = solve_eg(p, weights_of(inst));
        GridResult grid = grid_search_eg(p, w, 2e-3);
        CHECK(a.objective >= grid.objective - 1e-3);
    }
}

TEST_CASE("kkt_residuals measures exactly what it says") {
    Instance inst = single_row({1.0, 1.0});
    PackingPolytope p = build_polytope(inst, ids_of(inst));

    // Hand-built exact solution: all residuals vanish.
    Allocation exact;
    exact.rates = {{1, 0.5}, {2, 0.5}};
    exact.link_duals = {{1, 2.0}, {2, 2.0}};
    exact.row_duals = {2.0, 0.0, 0.0};
    exact.z = {0.5, 0.5};
    KKTReport r0 = kkt_residuals(p, weights_of(inst), exact);
    CHECK(r0.primal_residual == doctest::Approx(0.0));
    CHECK(r0.comp_slack_residual == doctest::Approx(0.0));
    CHECK(r0.stationarity_residual == doctest::Approx(0.0));
    CHECK(r0.dual_sum_gap == doctest::Approx(0.0));
    CHECK(r0.certified());

    // Perturbing one rate by +1% shows up as a ~1% relative stationarity gap.
    Allocation bumped = exact;
    bumped.rates[1] = 0.5 * 1.01;
    bumped.z = {0.5 * 1.01, 0.5};
    KKTReport r1 = kkt_residuals(p, weights_of(inst), bumped);
    CHECK(r1.stationarity_residual == doctest::Approx(0.01).epsilon(0.02));
    CHECK_FALSE(r1.certified());

    // Zero duals with an interior point: slackness holds, stationarity is 1.
    Allocation zeroed;
    zeroed.rates = {{1, 0.4}, {2, 0.4}};
    zeroed.link_duals = {{1, 2.5}, {2, 2.5}};
    zeroed.row_duals = {0.0, 0.0, 0.0};
    zeroed.z = {0.4, 0.4};
    KKTReport r2 = kkt_residuals(p, weights_of(inst), zeroed);
    CHECK(r2.comp_slack_residual == doctest::Approx(0.0));
    CHECK(r2.stationarity_residual == doctest::Approx(1.0));
}

TEST_CASE("weight scaling leaves rates fixed and scales duals") {
    GenParams gp;
    gp.n = 5;
    gp.m = 2;
    for (Family fam : {Family::multidim, Family::unrelated}) {
        Instance inst = gen_family(fam, gp, 11);
        PackingPolytope p = build_polytope(inst, ids_of(inst));
        std::map<JobId, double> w = weights_of(inst), w3;
        for (auto& [id, v] : w) w3[id] = 3.0 * v;
        Allocation a = solve_eg(p, w);
        Allocation b = solve_eg(p, w3);
        for (auto& [id, x] : a.rates) CHECK(b.rates[id] == doctest::Approx(x).epsilon(1e-6));
        for (size_t r = 0; r < a.row_duals.size(); ++r)
            CHECK(b.row_duals[r] == doctest::Approx(3.0 * a.row_duals[r])
                                        .epsilon(1e-6)
                                        .scale(1.0));
    }
}

TEST_CASE("dual-sum identity holds on every family") {
    GenParams gp;
    gp.n = 7;
    gp.m = 3;
    for (Family fam : {Family::multidim, Family::all_or_nothing, Family::unrelated,
                       Family::broadcast}) {
        for (uint64_t seed : {2ull, 4ull}) {
            GenParams q = gp;
            if (fam == Family::all_or_nothing) q.n = 6;
            Instance inst = gen_family(fam, q, seed);
            PackingPolytope p = build_polytope(inst, ids_of(inst));
            Allocation a = solve_eg(p, weights_of(inst));
            double dual_sum = 0, wsum = 0;
            for (double v : a.row_duals) dual_sum += v;
            for (const Job& j : inst.jobs) wsum += j.weight;
            CHECK(dual_sum == doctest::Approx(wsum).epsilon(1e-6));
        }
    }
}

TEST_CASE("single alive job short-circuits to its best rate") {
    Instance inst;
    inst.family = Family::unrelated;
    inst.machines = 3;
    inst.jobs = {{1, 2.0, 1, 0, {1.0, 2.5, 0.5}}, {2, 1.0, 1, 0, {1.0, 1.0, 1.0}}};
    inst.validate();
    PackingPolytope p = build_polytope(inst, {1});
    Allocation a = solve_eg(p, {{1, 2.0}});
    CHECK(a.rates[1] == doctest::Approx(2.5));
    CHECK(kkt_residuals(p, {{1, 2.0}}, a).certified());

    // Multidim: the rate is capped by the tightest row.
    Instance md;
    md.family = Family::multidim;
    md.capacities = {1.0, 2.0};
    md.jobs = {{1, 1.0, 1, 0, {2.0, 1.0}}};
    md.validate();
    PackingPolytope pm = build_polytope(md, {1});
    Allocation am = solve_eg(pm, {{1, 1.0}});
    CHECK(am.rates[1] == doctest::Approx(0.5));  // resource 0 binds at x = R/f = 1/2
    CHECK(kkt_residuals(pm, {{1, 1.0}}, am).certified());
}

TEST_CASE("non-convergence carries the best iterate") {
    GenParams gp;
    gp.n = 8;
    gp.m = 3;
    Instance inst = gen_family(Family::unrelated, gp, 3);
    PackingPolytope p = build_polytope(inst, ids_of(inst));
    try {
        solve_eg(p, weights_of(inst), 1e-8, 3);
        FAIL("expected SolveError");
    } catch (const SolveError& e) {
        CHECK_FALSE(e.best().rates.empty());
        CHECK(e.report().tol == doctest::Approx(1e-8));
    }
}

TEST_CASE("equilibrium prices clear the market") {
    // Single resource, unit demands: lambda = sum of weights, every job
    // spends exactly its budget.
    Instance inst = single_row({1.0, 1.0});
    PackingPolytope p = build_polytope(inst, ids_of(inst));
    Allocation a = solve_eg(p, weights_of(inst));
    PriceReport pr = equilibrium_prices(inst, p, a);
    CHECK(pr.prices[0] == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(pr.max_budget_residual <= 1e-7);
    CHECK(pr.market_clearing);

    // A job pinned at x = 1 spends through its singleton dual.
    Instance pin;
    pin.family = Family::multidim;
    pin.capacities = {10.0};
    pin.jobs = {{1, 5.0, 1, 0, {1.0}}, {2, 1.0, 1, 0, {9.5}}};
    pin.validate();
    PackingPolytope pp = build_polytope(pin, ids_of(pin));
    Allocation ap = solve_eg(pp, weights_of(pin));
    CHECK(ap.rates[1] == doctest::Approx(1.0).epsilon(1e-6));  // singleton row binds
    PriceReport prp = equilibrium_prices(pin, pp, ap);
    CHECK(prp.max_budget_residual <= 1e-6);

    // Two-resource brute-forced case: budgets still clear.
    Instance two;
    two.family = Family::multidim;
    two.capacities = {1.0, 1.0};
    two.jobs = {{1, 1, 1, 0, {1.0, 0.2}}, {2, 1, 1, 0, {0.2, 1.0}}};
    two.validate();
    PackingPolytope pt = build_polytope(two, ids_of(two));
    Allocation at = solve_eg(pt, weights_of(two));
    PriceReport prt = equilibrium_prices(two, pt, at);
    CHECK(prt.max_budget_residual <= 1e-6);
    CHECK_THROWS_AS(
        equilibrium_prices(gen_family(Family::broadcast, GenParams{}, 1), pt, at),
        ValidationError);
}
