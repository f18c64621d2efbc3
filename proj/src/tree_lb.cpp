#include "polysched/tree_lb.hpp"

#include <cmath>

namespace polysched {

int TreeInstance::job_count() const {
    int n = 0;
    for (const auto& lp : leaf_parents) n += static_cast<int>(lp.job_sizes.size());
    return n;
}

double TreeInstance::total_work() const {
    double s = 0;
    for (const auto& lp : leaf_parents)
        for (double p : lp.job_sizes) s += p;
    return s;
}

std::vector<std::pair<double, long long>> census_counts(int depth, int eta) {
    if (depth < 1) throw ValidationError("census_counts: depth must be >= 1");
    if (eta < 0 || eta > depth) throw ValidationError("census_counts: eta out of range");
    auto pow4 = [](int e) { return 1ll << (2 * e); };
    std::vector<std::pair<double, long long>> out;
    for (int k = 0; k < eta; ++k) {
        long long count = pow4(depth - eta) * (pow4(eta - k) - pow4(eta - k - 1));
        out.emplace_back(std::ldexp(1.0, k + 1) - 1.0, count);
    }
    out.emplace_back(std::ldexp(1.0, eta + 1) - 1.0, pow4(depth - eta));
    return out;
}

TreeInstance gen_lower_bound_tree(int depth, uint64_t seed) {
    if (depth < 1 || depth > 2)
        throw ValidationError("gen_lower_bound_tree: supported depths are 1 and 2");

    TreeInstance t;
    t.depth = depth;
    t.seed = seed;
    t.fanout = 1 << (2 * depth);
    Rng rng(seed ^ 0x7e3e1b00ull);

    // Internal nodes: root plus fanout^h nodes per depth h < D.
    int internal = 0;
    for (int h = 0, layer = 1; h < depth; ++h, layer *= t.fanout) internal += layer;
    t.big_child.resize(static_cast<size_t>(internal));
    for (int v = 0; v < internal; ++v)
        t.big_child[static_cast<size_t>(v)] = rng.uniform_int(0, t.fanout - 1);

    // Leaf-parents are the depth-(D-1) layer. The chain below the root
    // determines m(v); eta adds one more level when the whole chain is big
    // (the spine continues into the leaf designation).
    int first_leaf_parent = internal - (depth == 1 ? 1 : t.fanout);
    JobId next_id = 1;
    for (int v = first_leaf_parent; v < internal; ++v) {
        TreeInstance::LeafParent lp;
        lp.node = v;
        // Walk the chain root -> v (excluding the root itself).
        std::vector<int> chain;  // node indices below the root, top-down
        if (depth == 2) chain.push_back(v);
        bool on_spine = true;
        for (int c : chain) {
            int parent = 0;  // depth <= 2: every chain node's parent is the root
            int slot = c - 1;
            bool big = t.big_child[static_cast<size_t>(parent)] == slot;
            lp.big_on_chain += big ? 1 : 0;
            if (on_spine && big)
                ++lp.spine_prefix;
            else
                on_spine = false;
        }
        lp.eta = lp.spine_prefix + (lp.spine_prefix == depth - 1 ? 1 : 0);

        // Expand the census into one size per child slot: the big slot gets
        // the largest size, the rest are placed by a seeded shuffle.
        std::vector<double> sizes;
        for (const auto& [size, count] : census_counts(depth, lp.eta))
            for (long long c = 0; c < count; ++c) sizes.push_back(size);
        double top = sizes.back();
        sizes.pop_back();
        rng.shuffle(sizes);
        lp.job_sizes.resize(static_cast<size_t>(t.fanout));
        lp.job_ids.resize(static_cast<size_t>(t.fanout));
        int big_slot = t.big_child[static_cast<size_t>(v)];
        size_t cursor = 0;
        for (int slot = 0; slot < t.fanout; ++slot) {
            lp.job_sizes[static_cast<size_t>(slot)] =
                slot == big_slot ? top : sizes[cursor++];
            lp.job_ids[static_cast<size_t>(slot)] = next_id++;
        }
        t.leaf_parents.push_back(std::move(lp));
    }
    return t;
}

double verify_tree_witness(const TreeInstance& t) {
    double makespan = 0;
    for (const auto& lp : t.leaf_parents) {
        // Uplink product: each big node on the chain rides its parent's
        // 2-speed router; the big job gets one more factor of 2.
        double uplink = std::ldexp(1.0, lp.big_on_chain);
        int big_slot = t.big_child[static_cast<size_t>(lp.node)];
        for (int slot = 0; slot < static_cast<int>(lp.job_sizes.size()); ++slot) {
            double rate = uplink * (slot == big_slot ? 2.0 : 1.0);
            makespan = std::max(makespan, lp.job_sizes[static_cast<size_t>(slot)] / rate);
        }
    }
    if (makespan > 2.0 + 1e-12)
        throw InvariantViolation("tree witness makespan " + std::to_string(makespan) + " > 2");
    return makespan;
}

Instance export_tree_as_unrelated(const TreeInstance& t) {
    if (t.depth != 1)
        throw ValidationError("export_tree_as_unrelated: only D = 1 is expressible as fixed machines");
    Instance inst;
    inst.family = Family::tree_lb;
    inst.machines = t.fanout;
    // Router speeds: one 2-speed, rest 1-speed. Every job can ride any router.
    std::vector<double> speeds(static_cast<size_t>(t.fanout), 1.0);
    speeds[0] = 2.0;
    const auto& lp = t.leaf_parents.at(0);
    for (int slot = 0; slot < t.fanout; ++slot) {
        Job j;
        j.id = lp.job_ids[static_cast<size_t>(slot)];
        j.weight = 1.0;
        j.size = lp.job_sizes[static_cast<size_t>(slot)];
        j.release = 0.0;
        j.payload = speeds;
        inst.jobs.push_back(std::move(j));
    }
    inst.metadata["generator"] = "tree_lb";
    inst.metadata["depth"] = "1";
    inst.metadata["seed"] = std::to_string(t.seed);
    inst.validate();
    return inst;
}

}  // namespace polysched
