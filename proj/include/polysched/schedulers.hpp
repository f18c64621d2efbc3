#pragma once

#include <memory>

#include "polysched/engine.hpp"

namespace polysched {

// Proportional Fairness: solves the EG program over the alive jobs at every
// event and emits the certified (x*, y*) pair.
class PfScheduler : public Scheduler {
public:
    explicit PfScheduler(double tol = 1e-8, int max_iters = 100000)
        : tol_(tol), max_iters_(max_iters) {}
    std::string name() const override { return "pf"; }
    bool supports(Family) const override { return true; }
    SchedulerDecision decide(const SchedulerView& view) override;

private:
    double tol_;
    int max_iters_;
};

// Max-min fairness by progressive filling. On a single resource the growth
// variable is the allocation x_j * f_j (the classical water level); in other
// families all unfrozen rates grow uniformly. Baseline, not paper-specified
// beyond the single-dimension case.
class MaxMinScheduler : public Scheduler {
public:
    std::string name() const override { return "maxmin"; }
    bool supports(Family) const override { return true; }
    SchedulerDecision decide(const SchedulerView& view) override;
};

// Dominant Resource Fairness: grows every unfrozen job's dominant share
// max_d x_j f_jd / R_d at equal speed, freezing on resource saturation or
// x_j = 1. Unweighted, multidim only.
class DrfScheduler : public Scheduler {
public:
    std::string name() const override { return "drf"; }
    bool supports(Family f) const override { return f == Family::multidim; }
    SchedulerDecision decide(const SchedulerView& view) override;
};

std::unique_ptr<Scheduler> make_scheduler(const std::string& name, double blass_epsilon = 0.5);

// Free-function forms of the allocators, as used by the tests.
SchedulerDecision pf_allocate(const SchedulerView& view, double tol = 1e-8);
SchedulerDecision maxmin_allocate(const SchedulerView& view);
SchedulerDecision drf_allocate(const SchedulerView& view);

}  // namespace polysched
