#pragma once

#include <cstdint>
#include <vector>

#include "polysched/instance.hpp"

namespace polysched {

// Adversarial single-source routing tree with multiplicative speed
// propagation. Every non-leaf node has 4^D children and a matching set of
// routers, exactly one of which is 2-speed; the rest are 1-speed. Jobs are
// the leaves. One child per node is designated "big"; the chain of big
// designations starting at the root is the spine, and job sizes per
// leaf-parent follow the self-similar census below.
struct TreeInstance {
    int depth = 1;  // D
    uint64_t seed = 0;
    int fanout = 4;  // 4^D

    // Internal nodes in BFS order: node 0 is the root, then its children,
    // and so on down to depth D-1. big_child[v] is the designated big child
    // slot (0..fanout-1); for leaf-parents that slot names a job.
    std::vector<int> big_child;

    struct LeafParent {
        int node = 0;             // index into big_child
        int spine_prefix = 0;     // m(v): consecutive big designations from the root
        int big_on_chain = 0;     // all big nodes on the below-root chain (>= m)
        int eta = 0;              // census parameter
        std::vector<double> job_sizes;  // per child slot; slot big_child[node] holds the largest
        std::vector<JobId> job_ids;     // per child slot
    };
    std::vector<LeafParent> leaf_parents;

    int job_count() const;
    double total_work() const;
};

// Census multiset for one leaf-parent: (size, count) pairs, sizes 2^{k+1}-1
// for k = 0..eta, counts 4^{D-eta}(4^{eta-k} - 4^{eta-k-1}) and 4^{D-eta}
// for the top class. Counts sum to 4^D.
std::vector<std::pair<double, long long>> census_counts(int depth, int eta);

// D <= 2 supported (4^{D^2} jobs).
TreeInstance gen_lower_bound_tree(int depth, uint64_t seed);

// Builds the static offline schedule that routes every big child through its
// parent's 2-speed router and returns its makespan. Throws if the result
// exceeds 2 (it never does for a well-formed instance).
double verify_tree_witness(const TreeInstance& t);

// D = 1 only: the equivalent related-machines instance, 4 machines with
// speeds (2,1,1,1) and jobs of sizes (3,1,1,1) released at 0.
Instance export_tree_as_unrelated(const TreeInstance& t);

}  // namespace polysched
