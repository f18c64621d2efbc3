#include <doctest.h>

#include <cmath>

#include "polysched/schedulers.hpp"

using namespace polysched;

namespace {

SchedulerView view_of(const Instance& inst, double now = 0.0, double speed = 1.0) {
    std::vector<JobView> alive;
    for (const Job& j : inst.jobs)
        if (j.release <= now) alive.push_back({j.id, j.weight, j.release, j.payload});
    return SchedulerView(inst, now, speed, std::move(alive));
}

Instance multidim(std::vector<std::vector<double>> demands, std::vector<double> caps,
                  std::vector<double> weights = {}) {
    Instance inst;
    inst.family = Family::multidim;
    inst.capacities = std::move(caps);
    for (size_t i = 0; i < demands.size(); ++i)
        inst.jobs.push_back({static_cast<JobId>(i + 1),
                             weights.empty() ? 1.0 : weights[i], 1.0, 0.0, demands[i]});
    inst.validate();
    return inst;
}

}  // namespace

TEST_CASE("pf_allocate equal weights on one row split evenly") {
    Instance inst = multidim({{1.0}, {1.0}}, {1.0});
    SchedulerDecision d = pf_allocate(view_of(inst));
    CHECK(d.rates[1] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(d.rates[2] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(d.has_kkt);
    CHECK(d.kkt.certified());
}

TEST_CASE("pf on one unrelated machine reduces to equal time sharing") {
    Instance inst;
    inst.family = Family::unrelated;
    inst.machines = 1;
    inst.jobs = {{1, 1, 1, 0, {1.0}}, {2, 1, 1, 0, {1.0}}};
    inst.validate();
    SchedulerDecision d = pf_allocate(view_of(inst));
    CHECK(d.rates[1] == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(d.rates[2] == doctest::Approx(0.5).epsilon(1e-7));
    // The assignment shares are the z witness.
    double share = 0;
    for (const AssignmentShare& s : d.shares) share += s.share;
    CHECK(share == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("pf matches the eg example on two resources") {
    Instance inst = multidim({{1.0, 0.2}, {0.2, 1.0}}, {1.0, 1.0});
    SchedulerDecision d = pf_allocate(view_of(inst));
    CHECK(d.rates[1] == doctest::Approx(1.0 / 1.2).epsilon(1e-8));
    CHECK(d.rates[2] == doctest::Approx(1.0 / 1.2).epsilon(1e-8));
}

TEST_CASE("maxmin water level on a single resource") {
    Instance inst = multidim({{1.0}, {1.0}}, {1.0});
    SchedulerDecision d = maxmin_allocate(view_of(inst));
    CHECK(d.rates[1] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(d.rates[2] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("maxmin: a capped job frees its share for the others") {
    // Three unit-demand jobs; job 1 additionally capped at 0.2 by a private
    // resource. Water-filling by hand: all rise to 0.2, job 1 freezes, the
    // rest rise to (1 - 0.2) / 2 = 0.4.
    Instance inst = multidim({{1.0, 5.0}, {1.0, 0.0}, {1.0, 0.0}}, {1.0, 1.0});
    SchedulerDecision d = maxmin_allocate(view_of(inst));
    CHECK(d.rates[1] == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(d.rates[2] == doctest::Approx(0.4).epsilon(1e-9));
    CHECK(d.rates[3] == doctest::Approx(0.4).epsilon(1e-9));
}

TEST_CASE("maxmin single job runs at its maximum feasible rate") {
    Instance inst = multidim({{0.5}}, {1.0});
    SchedulerDecision d = maxmin_allocate(view_of(inst));
    CHECK(d.rates[1] == doctest::Approx(1.0).epsilon(1e-9));  // x <= 1 binds first
}

TEST_CASE("maxmin handles lifted families through the feasibility oracle") {
    Instance inst;
    inst.family = Family::unrelated;
    inst.machines = 2;
    inst.jobs = {{1, 1, 1, 0, {1.0, 1.0}}, {2, 1, 1, 0, {1.0, 1.0}}};
    inst.validate();
    SchedulerDecision d = maxmin_allocate(view_of(inst));
    // Two identical jobs on two unit machines: each gets a full machine.
    CHECK(d.rates[1] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(d.rates[2] == doctest::Approx(1.0).epsilon(1e-5));
    PackingPolytope p = build_polytope(inst, {1, 2});
    CHECK(check_feasible(p, d.rates, 1e-4).feasible);
}

TEST_CASE("pf equals maxmin on a single binding row with equal weights") {
    for (uint64_t seed : {3ull, 7ull, 13ull}) {
        Rng rng(seed);
        Instance inst;
        inst.family = Family::multidim;
        inst.capacities = {1.0};
        int n = 4 + static_cast<int>(seed % 4);
        for (int i = 0; i < n; ++i)
            inst.jobs.push_back(
                {i + 1, 1.0, 1.0, 0.0, {rng.uniform(0.5, 2.0)}});
        inst.validate();
        SchedulerDecision pf = pf_allocate(view_of(inst));
        SchedulerDecision mm = maxmin_allocate(view_of(inst));
        for (const Job& j : inst.jobs) {
            CHECK(pf.rates[j.id] < 1.0 - 1e-6);  // x <= 1 rows stay slack
            CHECK(pf.rates[j.id] == doctest::Approx(mm.rates[j.id]).epsilon(1e-6));
        }
    }
}

TEST_CASE("drf equalizes dominant shares") {
    // Symmetric pair: identical to PF.
    Instance sym = multidim({{1.0}, {1.0}}, {1.0});
    SchedulerDecision d = drf_allocate(view_of(sym));
    CHECK(d.rates[1] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(d.rates[2] == doctest::Approx(0.5).epsilon(1e-9));

    // Scaled classic two-resource pair: f1 = (5,20), f2 = (15,5), R = (9,18).
    // Progressive filling by hand: dominant shares reach 2/3 when resource 0
    // saturates, x = (0.6, 0.4).
    Instance classic = multidim({{5.0, 20.0}, {15.0, 5.0}}, {9.0, 18.0});
    SchedulerDecision dc = drf_allocate(view_of(classic));
    CHECK(dc.rates[1] == doctest::Approx(0.6).epsilon(1e-9));
    CHECK(dc.rates[2] == doctest::Approx(0.4).epsilon(1e-9));
    double share1 = dc.rates[1] * (20.0 / 18.0);
    double share2 = dc.rates[2] * (15.0 / 9.0);
    CHECK(share1 == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(share2 == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    // Resource 0 is saturated.
    CHECK(5.0 * dc.rates[1] + 15.0 * dc.rates[2] == doctest::Approx(9.0).epsilon(1e-9));

    // Single job: dominant share grows until a resource or the cap binds.
    Instance solo = multidim({{0.25, 0.5}}, {1.0, 1.0});
    CHECK(drf_allocate(view_of(solo)).rates[1] == doctest::Approx(1.0).epsilon(1e-9));

    Instance ur = gen_family(Family::unrelated, GenParams{}, 1);
    CHECK_THROWS_AS(drf_allocate(view_of(ur)), ValidationError);
}

TEST_CASE("every decision is polytope-feasible") {
    GenParams gp;
    gp.n = 6;
    gp.m = 2;
    for (uint64_t seed : {1ull, 2ull}) {
        Instance inst = gen_family(Family::multidim, gp, seed);
        PackingPolytope p = build_polytope(inst, [&] {
            std::vector<JobId> ids;
            for (const Job& j : inst.jobs) ids.push_back(j.id);
            return ids;
        }());
        for (auto alloc : {pf_allocate(view_of(inst)), maxmin_allocate(view_of(inst)),
                           drf_allocate(view_of(inst))})
            CHECK(check_feasible(p, alloc.rates, 1e-6).feasible);
    }
}

TEST_CASE("pf rates are invariant under uniform weight scaling") {
    GenParams gp;
    gp.n = 5;
    gp.m = 2;
    Instance inst = gen_family(Family::broadcast, gp, 5);
    SchedulerDecision a = pf_allocate(view_of(inst));
    for (Job& j : inst.jobs) j.weight *= 7.5;
    SchedulerDecision b = pf_allocate(view_of(inst));
    for (const Job& j : inst.jobs)
        CHECK(a.rates[j.id] == doctest::Approx(b.rates[j.id]).epsilon(1e-6));
}

TEST_CASE("make_scheduler resolves names") {
    CHECK(make_scheduler("pf")->name() == "pf");
    CHECK(make_scheduler("maxmin")->name() == "maxmin");
    CHECK(make_scheduler("drf")->name() == "drf");
    CHECK(make_scheduler("blass")->name() == "blass");
    CHECK_THROWS_AS(make_scheduler("srpt"), ValidationError);
}
