#pragma once

#include <map>
#include <vector>

#include "polysched/engine.hpp"

namespace polysched {

struct BlassConfig {
    double epsilon = 0.5;          // k = 1/epsilon must be an integer
    bool check_invariants = true;  // runtime-check the monotonicity lemmas

    int k() const;
    double eta() const { return 1.0 + 3.0 * epsilon; }
    void validate() const;
};

// SLAPS(k) share of each local rank r = 1..n on one machine:
//   nu[r] = eta * r^k / (1^k + ... + n^k).
// k = 0 is Round Robin; the shares sum to eta.
std::vector<double> slaps_shares(int n, int k, double eta);

// Balanced Latest Arrival Smooth Scheduling: SLAPS(k) per machine, dispatch
// to the machine maximizing L(i,j,t) = s_ij / (N_<j(i,t)+1), and Rearrange on
// completions. Emits eta-free base rates; run it at engine speed eta.
class BlassScheduler : public Scheduler {
public:
    explicit BlassScheduler(const BlassConfig& cfg);
    std::string name() const override { return "blass"; }
    bool supports(Family f) const override {
        return f == Family::unrelated || f == Family::tree_lb;
    }
    void on_arrival(const JobView& job, double now) override;
    void on_completion(JobId id, double now) override;
    SchedulerDecision decide(const SchedulerView& view) override;

    const BlassConfig& config() const { return cfg_; }
    // Hypothetical Round-Robin rate of j on machine i among earlier ranks.
    double rate_L(int machine, JobId j) const;
    int machine_of(JobId j) const;
    int earlier_rank_count(int machine, JobId j) const;  // N_<j(i, t)

private:
    int dispatch(const JobView& job);
    void rearrange(int departed_rank, int freed_machine);
    void check_invariants_after_event();

    struct JobState {
        int rank = 0;
        std::vector<double> speeds;
        int machine = -1;
    };
    BlassConfig cfg_;
    int machines_ = -1;  // learned from the first arrival's payload
    int next_rank_ = 1;
    std::map<JobId, JobState> jobs_;                  // alive only
    std::vector<std::vector<JobId>> machine_jobs_;    // ascending global rank
    std::map<JobId, std::pair<int, int>> last_mn_;    // Lemma 4.3 state
    std::map<JobId, double> last_l_;                  // Lemma 4.5 state
    bool warned_weights_ = false;
};

// Runs BLASS at its speed augmentation eta = 1 + 3*epsilon and tags the
// trace with epsilon.
Trace run_blass(const Instance& inst, const BlassConfig& cfg, const SimOptions& opts = {});

}  // namespace polysched
