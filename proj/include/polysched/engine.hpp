#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "polysched/eg_solver.hpp"
#include "polysched/polytope.hpp"

namespace polysched {

// What a scheduler is allowed to see about a job: everything except its size
// and remaining work (non-clairvoyance).
struct JobView {
    JobId id = 0;
    double weight = 1.0;
    double release = 0.0;
    std::vector<double> payload;  // f_j or s_.j
};

// Per-event view handed to schedulers. Deliberately carries no size or
// remaining-size information; the polytope over the alive set is available
// through build_alive_polytope().
class SchedulerView {
public:
    SchedulerView(const Instance& inst, double now, double speed,
                  std::vector<JobView> alive)
        : inst_(&inst), now_(now), speed_(speed), alive_(std::move(alive)) {}

    double now() const { return now_; }
    double speed() const { return speed_; }
    Family family() const { return inst_->family; }
    const std::vector<double>& capacities() const { return inst_->capacities; }
    int machines() const { return inst_->machines; }
    const std::vector<JobView>& alive() const { return alive_; }
    std::map<JobId, double> weights() const {
        std::map<JobId, double> w;
        for (const JobView& j : alive_) w[j.id] = j.weight;
        return w;
    }
    PackingPolytope build_alive_polytope() const {
        std::vector<JobId> ids;
        for (const JobView& j : alive_) ids.push_back(j.id);
        return build_polytope(*inst_, ids);
    }

private:
    const Instance* inst_;
    double now_;
    double speed_;
    std::vector<JobView> alive_;
};

struct AssignmentShare {
    JobId job = 0;
    int machine = -1;  // machine/page; -1 with set_index for all_or_nothing
    int set_index = -1;
    double share = 0.0;
};

struct SchedulerDecision {
    std::map<JobId, double> rates;  // base rates, feasible for the polytope at speed 1
    bool has_duals = false;
    std::vector<std::pair<RowKey, double>> row_duals;
    std::map<JobId, double> link_duals;
    std::vector<AssignmentShare> shares;
    bool has_kkt = false;
    KKTReport kkt;
};

class Scheduler {
public:
    virtual ~Scheduler() = default;
    virtual std::string name() const = 0;
    virtual bool supports(Family f) const = 0;
    virtual void on_arrival(const JobView& job, double now) { (void)job, (void)now; }
    virtual void on_completion(JobId id, double now) { (void)id, (void)now; }
    virtual SchedulerDecision decide(const SchedulerView& view) = 0;
};

struct TraceSegment {
    double t0 = 0, t1 = 0;
    std::map<JobId, double> rates;
    std::vector<std::pair<RowKey, double>> row_duals;
    std::map<JobId, double> link_duals;
    std::vector<AssignmentShare> shares;
    bool has_duals = false;
};

struct TraceEvent {
    double time = 0;
    std::vector<JobId> arrivals;
    std::vector<JobId> completions;
};

struct Trace {
    Instance instance;  // traces are self-contained
    std::string scheduler;
    double speed = 1.0;
    double epsilon = 0.0;  // BLASS config when applicable
    std::vector<TraceSegment> segments;
    std::vector<TraceEvent> events;
    std::map<JobId, double> completion;
    double makespan = 0.0;

    bool complete() const { return completion.size() == instance.jobs.size(); }
    // Processed work of `id` up to time t, at face-value segment rates times
    // the engine speed.
    double processed(JobId id, double t) const;
};

struct Metrics {
    double weighted_completion = 0;  // sum w_j C_j
    double weighted_flow = 0;        // sum w_j F_j
    double total_flow = 0;           // sum F_j
    double makespan = 0;
    std::map<JobId, double> completion, flow;
};

struct SimOptions {
    double feasibility_tol = 1e-6;
    bool check_decisions = true;     // verify every decision against the polytope
    double tie_tol = 1e-12;          // simultaneous-completion window, absolute
    int max_events = 1000000;
};

// Event-driven simulation: the scheduler is invoked exactly at t = 0, at each
// arrival, and at each completion; rates are constant in between and the next
// completion is solved exactly from the engine-private remaining sizes.
Trace simulate(const Instance& inst, Scheduler& sched, double speed = 1.0,
               const SimOptions& opts = {});

Metrics metrics(const Trace& tr);

// delta = min_j remaining_j / (speed * rate_j) over positive rates, plus the
// set of jobs within tie tolerance of the minimum. Throws SimulationError
// when no job makes progress.
std::pair<double, std::vector<JobId>> next_completion(
    const std::map<JobId, double>& remaining, const std::map<JobId, double>& rates,
    double speed, double tie_tol = 1e-12);

// Trace/metrics serialization for the CLI and the certificate pipeline.
std::string emit_trace(const Trace& tr);
Trace load_trace(const std::string& text);
Trace load_trace_file(const std::string& path);
void save_trace_file(const Trace& tr, const std::string& path);

}  // namespace polysched
