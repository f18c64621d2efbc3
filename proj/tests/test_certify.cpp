#include <doctest.h>

#include <cmath>

#include "polysched/blass.hpp"
#include "polysched/certify.hpp"
#include "polysched/schedulers.hpp"
#include "polysched/tree_lb.hpp"

using namespace polysched;

namespace {

Instance unit_resource(std::vector<std::pair<double, double>> size_release,
                       std::vector<double> weights = {}) {
    Instance inst;
    inst.family = Family::multidim;
    inst.capacities = {1.0};
    for (size_t i = 0; i < size_release.size(); ++i) {
        double w = weights.empty() ? 1.0 : weights[i];
        inst.jobs.push_back({static_cast<JobId>(i + 1), w, size_release[i].first,
                             size_release[i].second, {1.0}});
    }
    inst.validate();
    return inst;
}

}  // namespace

TEST_CASE("weighted median") {
    std::vector<double> v1{1, 2, 3}, w1{1, 1, 1};
    CHECK(weighted_median(v1, w1) == 2.0);
    std::vector<double> v2{1, 2}, w2{3, 1};
    CHECK(weighted_median(v2, w2) == 1.0);  // the heavy low value carries half
    std::vector<double> v3{5}, w3{0.1};
    CHECK(weighted_median(v3, w3) == 5.0);
    std::vector<double> empty;
    CHECK_THROWS_AS(weighted_median(empty, empty), ValidationError);
}

TEST_CASE("slot_trace integrates work exactly") {
    // One segment [0,1) at rate 1, explicit delta = 0.25: q = 0.25 per slot.
    Instance inst = unit_resource({{1.0, 0.0}});
    PfScheduler pf;
    Trace tr = simulate(inst, pf, 1.0);
    SlottedTrace st = slot_trace(tr, 0.25);
    REQUIRE(st.slots == 4);
    for (int l = 0; l < 4; ++l) CHECK(st.q[0][static_cast<size_t>(l)] == doctest::Approx(0.25));

    // Rates 1 then 0 split mid-slot: the work prorates.
    Instance two = unit_resource({{1.0, 0.0}, {0.5, 0.0}});
    Trace tr2 = simulate(two, pf, 1.0);  // equal shares, job 2 finishes at 1.0
    SlottedTrace st2 = slot_trace(tr2, 0.4);
    // Job 2 runs at 1/2 on [0,1): its q in slot [0.8,1.2) is 0.2*0.5.
    CHECK(st2.q[1][2] == doctest::Approx(0.1));

    // Conservation on any trace.
    for (size_t j = 0; j < st2.jobs.size(); ++j) {
        double total = 0;
        for (int l = 0; l < st2.slots; ++l) total += st2.q[j][static_cast<size_t>(l)];
        CHECK(total == doctest::Approx(tr2.instance.jobs[j].size).epsilon(1e-9));
    }

    // The auto grid refuses jobs spanning fewer than ~100 slots.
    CHECK_NOTHROW(slot_trace(tr));
    CHECK(slot_trace(tr).slots >= 100);
}

TEST_CASE("singleton trace: alpha equals w * C and zeta is the own ratio") {
    Instance inst = unit_resource({{1.0, 0.0}}, {2.0});
    PfScheduler pf;
    Trace tr = simulate(inst, pf, 1.0);
    SlottedTrace st = slot_trace(tr, 1.0 / 128);
    CompletionDualCert cert = completion_duals(st, tr, 32.0);
    CHECK(cert.alpha[0] == doctest::Approx(2.0 * 1.0).epsilon(1e-9));
    for (int l = 0; l < st.slots; ++l)
        CHECK(cert.zeta[static_cast<size_t>(l)] ==
              doctest::Approx(st.q[0][static_cast<size_t>(l)] / 1.0));
    // The last slot's beta is (delta/s) * zeta * y; earlier slots are suffix sums.
    size_t last = static_cast<size_t>(st.slots - 1);
    for (size_t r = 0; r < cert.beta.size(); ++r) {
        CHECK(cert.beta[r][last] ==
              doctest::Approx((cert.delta / 32.0) * cert.zeta[last] * st.ybar[r][last]));
        if (st.slots >= 2)
            CHECK(cert.beta[r][last - 1] ==
                  doctest::Approx(cert.beta[r][last] + (cert.delta / 32.0) *
                                                           cert.zeta[last - 1] *
                                                           st.ybar[r][last - 1]));
    }
    CertCheckReport rep = check_completion_cert(cert, st, tr);
    CHECK(rep.ok);
}

TEST_CASE("symmetric pair: alpha captures the full weighted completion time") {
    // Both unit jobs share the machine; each is always at the median, so
    // alpha_j = w_j C_j = 2 and sum alpha = sum w C = 4.
    Instance inst = unit_resource({{1.0, 0.0}, {1.0, 0.0}});
    PfScheduler pf;
    Trace tr = simulate(inst, pf, 1.0);
    SlottedTrace st = slot_trace(tr);
    CompletionDualCert cert = completion_duals(st, tr, 32.0);
    CHECK(cert.alpha[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(cert.alpha[1] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(cert.alg_weighted_completion == doctest::Approx(4.0));
    CertCheckReport rep = check_completion_cert(cert, st, tr);
    CHECK(rep.ok);
    CHECK(cert.dual_objective >= (0.25 - 0.01) * 4.0);
}

TEST_CASE("s=32 certificates hold across families, at the paper's constant") {
    GenParams gp;
    gp.n = 6;
    gp.m = 2;
    gp.release_span = 1.5;
    PfScheduler pf;
    for (Family fam : {Family::multidim, Family::all_or_nothing, Family::unrelated,
                       Family::broadcast}) {
        Instance inst = gen_family(fam, gp, 31);
        Trace tr = simulate(inst, pf, 1.0);
        SlottedTrace st = slot_trace(tr);
        CompletionDualCert cert = completion_duals(st, tr, 32.0);
        CertCheckReport rep = check_completion_cert(cert, st, tr);
        CHECK(rep.ok);
        CHECK(rep.lemma_alpha_ok);
        CHECK(rep.lemma_beta_ok);
        CHECK(cert.dual_objective >=
              (0.25 - 0.01) * cert.alg_weighted_completion);
        // Weak duality: the certified bound never exceeds the algorithm.
        CHECK(rep.lower_bound <= cert.alg_weighted_completion + 1e-9);
    }
}

TEST_CASE("corrupted completion certificates are rejected with witnesses") {
    Instance inst = unit_resource({{1.0, 0.0}, {2.0, 0.0}, {1.5, 0.5}});
    PfScheduler pf;
    Trace tr = simulate(inst, pf, 1.0);
    SlottedTrace st = slot_trace(tr);
    CompletionDualCert cert = completion_duals(st, tr, 32.0);
    REQUIRE(check_completion_cert(cert, st, tr).ok);

    CompletionDualCert bad_alpha = cert;
    bad_alpha.alpha[1] *= 1.02;
    CertCheckReport r1 = check_completion_cert(bad_alpha, st, tr);
    CHECK_FALSE(r1.ok);
    CHECK_FALSE(r1.violations.empty());

    CompletionDualCert bad_beta = cert;
    bad_beta.beta[0][10] *= 0.98;
    CHECK_FALSE(check_completion_cert(bad_beta, st, tr).ok);

    CompletionDualCert bad_zeta = cert;
    bad_zeta.zeta[5] *= 1.05;
    CHECK_FALSE(check_completion_cert(bad_zeta, st, tr).ok);
}

TEST_CASE("blass duals: single job accumulates exactly its flow time") {
    Instance inst;
    inst.family = Family::unrelated;
    inst.machines = 1;
    inst.jobs = {{1, 1, 2.0, 0, {1.0}}};
    inst.validate();
    BlassConfig cfg{0.5};
    Trace tr = run_blass(inst, cfg);
    UnrelatedDualCert cert = blass_duals(tr, 0.5);
    double flow = tr.completion[1] - 0.0;
    CHECK(cert.delta_j[0] == doctest::Approx(flow).epsilon(1e-9));
    CHECK(cert.sum_delta == doctest::Approx(cert.total_flow).epsilon(1e-9));
}

TEST_CASE("blass certificate identities and verification") {
    GenParams gp;
    gp.n = 12;
    gp.m = 3;
    gp.unit_weights = true;
    gp.release_span = 3.0;
    for (double eps : {1.0, 0.5, 1.0 / 3.0}) {
        Instance inst = gen_family(Family::unrelated, gp, 77);
        BlassConfig cfg{eps};
        Trace tr = run_blass(inst, cfg);
        UnrelatedDualCert cert = blass_duals(tr, eps);
        // sum Delta = sum F, and the dual objective has the closed form
        // sum F * eps^2 / ((1+2eps)(1+3eps)).
        CHECK(cert.sum_delta == doctest::Approx(cert.total_flow).epsilon(1e-6));
        double expected = cert.total_flow * eps * eps / ((1 + 2 * eps) * (1 + 3 * eps));
        CHECK(cert.dual_objective == doctest::Approx(expected).epsilon(1e-6));

        CertCheckReport rep = check_blass_cert(cert, tr);
        CHECK(rep.ok);
        CHECK(rep.certified_ratio <=
              (1 + 2 * eps) * (1 + 3 * eps) / (eps * eps) * (1 + 1e-6));
    }
}

TEST_CASE("corrupted blass certificates are rejected") {
    GenParams gp;
    gp.n = 8;
    gp.m = 2;
    gp.unit_weights = true;
    Instance inst = gen_family(Family::unrelated, gp, 5);
    Trace tr = run_blass(inst, BlassConfig{0.5});
    UnrelatedDualCert cert = blass_duals(tr, 0.5);
    REQUIRE(check_blass_cert(cert, tr).ok);

    UnrelatedDualCert bad = cert;
    bad.beta[2][1] *= 1.02;
    CHECK_FALSE(check_blass_cert(bad, tr).ok);

    UnrelatedDualCert bad2 = cert;
    bad2.alpha[3] *= 1.02;
    CHECK_FALSE(check_blass_cert(bad2, tr).ok);

    CHECK_THROWS_AS(blass_duals(tr, 1.0), ValidationError);  // wrong epsilon for the trace
}

TEST_CASE("smith rule by exchange argument") {
    // (w, p) = (1,1), (2,1): job 2 first, sum w C = 2*1 + 1*2 = 4; checked by
    // enumerating both orders.
    Instance inst = unit_resource({{1.0, 0.0}, {1.0, 0.0}}, {1.0, 2.0});
    double order_a = 1.0 * 1.0 + 2.0 * 2.0;  // job 1 first: 1*1 + 2*2 = 5
    double order_b = 2.0 * 1.0 + 1.0 * 2.0;  // job 2 first: 4
    CHECK(smith_opt(inst) == doctest::Approx(std::min(order_a, order_b)));

    // Identical jobs: every order gives the same value.
    Instance same = unit_resource({{2.0, 0.0}, {2.0, 0.0}, {2.0, 0.0}});
    CHECK(smith_opt(same) == doctest::Approx(2.0 + 4.0 + 6.0));

    Instance solo = unit_resource({{3.0, 0.0}}, {2.0});
    CHECK(smith_opt(solo) == doctest::Approx(6.0));

    Instance released = unit_resource({{1.0, 0.5}});
    CHECK_THROWS_AS(smith_opt(released), ValidationError);
}

TEST_CASE("brute-force offline schedule oracle") {
    // Single unit job on a unit machine.
    Instance one;
    one.family = Family::unrelated;
    one.machines = 1;
    one.jobs = {{1, 1, 1.0, 0, {1.0}}};
    one.validate();
    CHECK(brute_force_opt(one, OfflineObjective::total_flow, 1.0) == doctest::Approx(1.0));

    // Two jobs on disjoint machines run in parallel: sum C = 2.
    Instance par;
    par.family = Family::unrelated;
    par.machines = 2;
    par.jobs = {{1, 1, 1.0, 0, {1.0, 0.0}}, {2, 1, 1.0, 0, {0.0, 1.0}}};
    par.validate();
    CHECK(brute_force_opt(par, OfflineObjective::total_flow, 1.0) == doctest::Approx(2.0));

    // One machine, sizes (1, 2): shortest first, 1 + 3 = 4.
    Instance spt;
    spt.family = Family::unrelated;
    spt.machines = 1;
    spt.jobs = {{1, 1, 1.0, 0, {1.0}}, {2, 1, 2.0, 0, {1.0}}};
    spt.validate();
    CHECK(brute_force_opt(spt, OfflineObjective::total_flow, 1.0) == doctest::Approx(4.0));

    Instance big;
    big.family = Family::unrelated;
    big.machines = 1;
    big.jobs = {{1, 1, 1, 0, {1.0}}, {2, 1, 1, 0, {1.0}}, {3, 1, 1, 0, {1.0}},
                {4, 1, 1, 0, {1.0}}, {5, 1, 1, 0, {1.0}}, {6, 1, 1, 0, {1.0}}};
    big.validate();
    CHECK_THROWS_AS(brute_force_opt(big, OfflineObjective::total_flow, 1.0),
                    ValidationError);
}

TEST_CASE("weak duality against the brute-force oracle") {
    // Tiny unrelated instances with integral speeds so the slotted DP is
    // exact. The completion certificate's bound sits below the weighted
    // completion optimum; the blass dual objective sits below OPT_LP, which
    // is within a factor 2 of the optimal flow time.
    Instance inst;
    inst.family = Family::unrelated;
    inst.machines = 2;
    inst.jobs = {{1, 1, 1.0, 0, {1.0, 2.0}},
                 {2, 1, 2.0, 0, {2.0, 1.0}},
                 {3, 1, 1.0, 0, {1.0, 1.0}}};
    inst.validate();

    double opt_wc = brute_force_opt(inst, OfflineObjective::weighted_completion, 0.5);
    PfScheduler pf;
    Trace tr = simulate(inst, pf, 1.0);
    SlottedTrace st = slot_trace(tr);
    CompletionDualCert cert = completion_duals(st, tr, 32.0);
    CHECK(cert.lower_bound <= opt_wc * (1 + 1e-6));

    double opt_flow = brute_force_opt(inst, OfflineObjective::total_flow, 0.5);
    Instance unweighted = inst;
    Trace btr = run_blass(unweighted, BlassConfig{0.5});
    UnrelatedDualCert bcert = blass_duals(btr, 0.5);
    CHECK(bcert.dual_objective <= 2.0 * opt_flow * (1 + 1e-6));
}

TEST_CASE("certified lower bounds respect oracle optima") {
    // Single machine, releases 0: the PF certificate's bound divided by s
    // can never exceed Smith's optimum.
    PfScheduler pf;
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
        Rng rng(seed);
        Instance inst;
        inst.family = Family::multidim;
        inst.capacities = {1.0};
        int n = 3 + static_cast<int>(seed % 4);
        for (int i = 0; i < n; ++i)
            inst.jobs.push_back({i + 1, rng.uniform(0.5, 3.0),
                                 rng.log_uniform(0.5, 2.5), 0.0, {1.0}});
        inst.validate();
        Trace tr = simulate(inst, pf, 1.0);
        SlottedTrace st = slot_trace(tr);
        CompletionDualCert cert = completion_duals(st, tr, 32.0);
        double opt = smith_opt(inst);
        CHECK(cert.lower_bound <= opt + 1e-6);
        Metrics m = metrics(tr);
        CHECK(m.weighted_completion / opt <= 64.0);
    }
}
