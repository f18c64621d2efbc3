#include "polysched/blass.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace polysched {

int BlassConfig::k() const {
    double inv = 1.0 / epsilon;
    int k = static_cast<int>(std::lround(inv));
    if (!(epsilon > 0) || std::abs(inv - k) > 1e-9)
        throw ValidationError("BlassConfig: 1/epsilon must be a positive integer");
    return k;
}

void BlassConfig::validate() const { (void)k(); }

std::vector<double> slaps_shares(int n, int k, double eta) {
    if (n < 1) throw ValidationError("slaps_shares: n must be >= 1");
    if (k < 0) throw ValidationError("slaps_shares: k must be >= 0");
    double denom = 0;
    std::vector<double> pow_r(static_cast<size_t>(n));
    for (int r = 1; r <= n; ++r) {
        double p = 1;
        for (int e = 0; e < k; ++e) p *= r;
        pow_r[static_cast<size_t>(r - 1)] = p;
        denom += p;
    }
    std::vector<double> nu(static_cast<size_t>(n));
    for (int r = 1; r <= n; ++r) nu[static_cast<size_t>(r - 1)] = eta * pow_r[static_cast<size_t>(r - 1)] / denom;
    return nu;
}

BlassScheduler::BlassScheduler(const BlassConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

int BlassScheduler::machine_of(JobId j) const { return jobs_.at(j).machine; }

int BlassScheduler::earlier_rank_count(int machine, JobId j) const {
    int rank = jobs_.at(j).rank;
    int count = 0;
    for (JobId other : machine_jobs_[static_cast<size_t>(machine)])
        if (jobs_.at(other).rank < rank) ++count;
    return count;
}

double BlassScheduler::rate_L(int machine, JobId j) const {
    double s = jobs_.at(j).speeds[static_cast<size_t>(machine)];
    return s / (earlier_rank_count(machine, j) + 1);
}

int BlassScheduler::dispatch(const JobView& job) {
    int best = -1;
    double best_l = 0;
    for (int i = 0; i < machines_; ++i) {
        double s = job.payload[static_cast<size_t>(i)];
        if (s <= 0) continue;
        // The arriving job has the largest rank, so every assigned alive job
        // counts into N_<j.
        double l = s / (static_cast<double>(machine_jobs_[static_cast<size_t>(i)].size()) + 1.0);
        if (l > best_l) {  // ties go to the lowest machine id
            best_l = l;
            best = i;
        }
    }
    if (best < 0)
        throw SimulationError("blass: job " + std::to_string(job.id) +
                              " has zero speed on every machine");
    return best;
}

void BlassScheduler::on_arrival(const JobView& job, double) {
    if (machines_ < 0) {
        machines_ = static_cast<int>(job.payload.size());
        machine_jobs_.assign(static_cast<size_t>(machines_), {});
    }
    JobState st;
    st.rank = next_rank_++;
    st.speeds = job.payload;
    jobs_[job.id] = st;
    int m = dispatch(job);
    jobs_[job.id].machine = m;
    auto& list = machine_jobs_[static_cast<size_t>(m)];
    list.push_back(job.id);  // newest rank goes last
}

// Fig. 1: scan alive jobs with global rank above the departed job's in
// ascending rank order; move a job onto the slack machine only on a strict
// improvement of L, after which its old machine becomes the slack one.
void BlassScheduler::rearrange(int departed_rank, int freed_machine) {
    std::vector<std::pair<int, JobId>> order;
    for (const auto& [id, st] : jobs_)
        if (st.rank > departed_rank) order.emplace_back(st.rank, id);
    std::sort(order.begin(), order.end());

    int b = freed_machine;
    for (const auto& [rank, id] : order) {
        (void)rank;
        int cur = jobs_.at(id).machine;
        if (cur == b) continue;
        if (rate_L(b, id) > rate_L(cur, id)) {
            auto& from = machine_jobs_[static_cast<size_t>(cur)];
            from.erase(std::find(from.begin(), from.end(), id));
            auto& to = machine_jobs_[static_cast<size_t>(b)];
            to.push_back(id);
            std::sort(to.begin(), to.end(), [&](JobId a, JobId c) {
                return jobs_.at(a).rank < jobs_.at(c).rank;
            });
            jobs_.at(id).machine = b;
            b = cur;
        }
    }
}

void BlassScheduler::on_completion(JobId id, double) {
    int m = jobs_.at(id).machine;
    int rank = jobs_.at(id).rank;
    auto& list = machine_jobs_[static_cast<size_t>(m)];
    list.erase(std::find(list.begin(), list.end(), id));
    jobs_.erase(id);
    last_mn_.erase(id);
    last_l_.erase(id);
    rearrange(rank, m);
}

void BlassScheduler::check_invariants_after_event() {
    const double tol = 1e-9;
    for (const auto& [id, st] : jobs_) {
        // Lemma: the current machine maximizes L over all machines.
        double l_own = rate_L(st.machine, id);
        for (int i = 0; i < machines_; ++i) {
            if (rate_L(i, id) > l_own + tol)
                throw InvariantViolation(
                    "blass: job " + std::to_string(id) + " prefers machine " +
                    std::to_string(i) + " (L=" + std::to_string(rate_L(i, id)) +
                    ") over its own (L=" + std::to_string(l_own) + ")");
        }
        // Lemma: L(sigma(j,t), j, t) never decreases while j is alive.
        auto lit = last_l_.find(id);
        if (lit != last_l_.end() && l_own < lit->second - tol)
            throw InvariantViolation("blass: L(sigma(j),j) decreased for job " +
                                     std::to_string(id));
        last_l_[id] = l_own;
        // Lemma: N_<j is non-increasing while j stays on one machine.
        int n_less = earlier_rank_count(st.machine, id);
        auto mit = last_mn_.find(id);
        if (mit != last_mn_.end() && mit->second.first == st.machine &&
            n_less > mit->second.second)
            throw InvariantViolation("blass: N_<j increased on a fixed machine for job " +
                                     std::to_string(id));
        last_mn_[id] = {st.machine, n_less};
    }
}

SchedulerDecision BlassScheduler::decide(const SchedulerView& view) {
    if (!warned_weights_) {
        for (const JobView& j : view.alive())
            if (j.weight != 1.0) {
                std::cerr << "blass: weights are ignored (unweighted flow-time objective)\n";
                warned_weights_ = true;
                break;
            }
    }
    if (cfg_.check_invariants) check_invariants_after_event();

    SchedulerDecision dec;
    const int k = cfg_.k();
    for (int i = 0; i < machines_; ++i) {
        const auto& list = machine_jobs_[static_cast<size_t>(i)];
        if (list.empty()) continue;
        std::vector<double> nu = slaps_shares(static_cast<int>(list.size()), k, 1.0);
        for (size_t r = 0; r < list.size(); ++r) {
            JobId id = list[r];
            double share = nu[r];  // local rank r+1
            dec.rates[id] = share * jobs_.at(id).speeds[static_cast<size_t>(i)];
            dec.shares.push_back({id, i, -1, share});
        }
    }
    return dec;
}

Trace run_blass(const Instance& inst, const BlassConfig& cfg, const SimOptions& opts) {
    BlassScheduler sched(cfg);
    Trace tr = simulate(inst, sched, cfg.eta(), opts);
    tr.epsilon = cfg.epsilon;
    return tr;
}

}  // namespace polysched
