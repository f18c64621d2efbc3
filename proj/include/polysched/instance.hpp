#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "polysched/common.hpp"

namespace polysched {

enum class Family { multidim, all_or_nothing, unrelated, broadcast, tree_lb };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

// True for families whose polytope goes through assignment variables z
// (x <= Q z, H z <= 1) rather than an explicit row form B x <= 1.
inline bool is_lifted_family(Family f) {
    return f != Family::multidim;
}

struct Job {
    JobId id = 0;
    double weight = 1.0;   // w_j
    double size = 1.0;     // p_j, hidden from schedulers
    double release = 0.0;  // r_j
    // Demand vector f_j (multidim / all_or_nothing) or per-machine/page
    // speeds s_.j (unrelated / broadcast / tree_lb).
    std::vector<double> payload;
};

struct Instance {
    Family family = Family::multidim;
    std::vector<double> capacities;  // R_d, multidim / all_or_nothing only
    int machines = 0;                // machine/page count, lifted machine families
    std::vector<Job> jobs;           // kept sorted by (release, id)
    std::map<std::string, std::string> metadata;

    // all_or_nothing: every subset of job ids whose summed demand fits the
    // capacities, enumerated at validation time (n <= 15). Sorted, includes {}.
    std::vector<std::vector<JobId>> feasible_sets;

    int dimension() const;  // expected payload length
    const Job& job(JobId id) const;
    bool has_job(JobId id) const;
    // Position in release order; global rank of jobs[i] is i + 1.
    int global_rank(JobId id) const;
    double total_weight() const;
    double total_work() const;

    // Sorts jobs, enumerates feasible sets when applicable, and checks all
    // type invariants. Throws ValidationError naming the offending job.
    void validate();
};

struct GenParams {
    int n = 4;
    int m = 2;  // resources (multidim/aon) or machines/pages
    double weight_lo = 0.25, weight_hi = 4.0;
    double size_lo = 0.25, size_hi = 4.0;
    double release_span = 0.0;  // releases uniform in [0, span]; 0 = all at zero
    double zero_prob = 0.25;    // chance a lifted payload entry is 0
    bool unit_weights = false;
};

// Deterministic in (family, params, seed).
Instance gen_family(Family family, const GenParams& params, uint64_t seed);

// Concatenates `copies` shifted copies of `base` (releases 0, gap, 2*gap, ...).
// All copies share the same machines, which is what enforces cross-copy
// exclusion; only unrelated-structured bases are supported.
Instance gen_flowtime_concat(const Instance& base, int copies, double gap);

// Enumerate subsets of `demands` (one vector per job) fitting `capacities`.
// Exposed for tests; n <= 15 enforced.
std::vector<std::vector<JobId>> enumerate_feasible_sets(
    const std::vector<JobId>& ids,
    const std::vector<std::vector<double>>& demands,
    const std::vector<double>& capacities);

// Instance document I/O. Schema:
//   {"family": str, "capacities": [..] | int, "jobs": [{id, weight, size,
//    release, payload: [..]}], "metadata": {str: str}}
// Numbers are plain decimals; NaN/inf rejected.
Instance load_instance(const std::string& text);
Instance load_instance_json(const nlohmann::json& doc);
Instance load_instance_file(const std::string& path);
std::string emit_instance(const Instance& inst);  // canonical form
void save_instance_file(const Instance& inst, const std::string& path);

}  // namespace polysched
