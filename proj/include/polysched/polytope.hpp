#pragma once

#include <map>
#include <string>
#include <vector>

#include "polysched/instance.hpp"

namespace polysched {

// Stable identity for a polytope row across events (a resource keeps its
// index, a singleton/job row follows the job, a machine row the machine).
enum class RowKind { resource, singleton, machine, job_cap, simplex };

struct RowKey {
    RowKind kind = RowKind::resource;
    int ref = 0;  // resource index / job id / machine id; unused for simplex

    bool operator<(const RowKey& o) const {
        if (kind != o.kind) return kind < o.kind;
        return ref < o.ref;
    }
    bool operator==(const RowKey& o) const { return kind == o.kind && ref == o.ref; }
};

std::string to_string(const RowKey& k);

// Packing polytope over the alive jobs. Two representations share the type:
//  - direct (multidim): rows B x <= 1; z is identified with x (Q = I).
//  - lifted (unrelated / broadcast / all_or_nothing / tree_lb): x <= Q z,
//    H z <= 1 with family-specific columns. The lifted structure is kept;
//    projecting onto x can blow up the row count.
struct PackingPolytope {
    Family family = Family::multidim;
    bool lifted = false;
    std::vector<JobId> jobs;  // sorted alive ids

    struct Column {
        int machine = -1;   // unrelated: machine; broadcast: page
        JobId job = -1;     // unrelated only
        int set_index = -1; // all_or_nothing: index into column_sets
    };
    int cols = 0;
    std::vector<Column> columns;
    std::vector<std::vector<JobId>> column_sets;  // all_or_nothing columns

    // Q: per alive job (position-indexed), sparse (column, coefficient).
    std::vector<std::vector<std::pair<int, double>>> q_rows;
    // H rows (== B rows in the direct case).
    struct HRow {
        RowKey key;
        std::vector<std::pair<int, double>> terms;  // (column, coefficient)
    };
    std::vector<HRow> h_rows;

    int job_pos(JobId id) const;
    // Column of job j in the direct row form; only valid when !lifted.
    std::vector<std::pair<int, double>> direct_column(JobId id) const;
    double eval_row(const HRow& row, const std::vector<double>& z) const;
    // [Q z]_j for all alive jobs.
    std::vector<double> rates_from_z(const std::vector<double>& z) const;
};

// Restricts the instance's polytope to `alive`. Throws ValidationError when a
// job's column is identically zero (the job could never be processed).
PackingPolytope build_polytope(const Instance& inst, const std::vector<JobId>& alive);

struct FeasibilityReport {
    bool feasible = false;
    double max_violation = 0.0;  // max_d (B_d.x - 1), or the lifted scaling gap
    double tol = 0.0;
    std::vector<RowKey> violated_rows;  // direct form only
};

// Direct form: evaluates the rows. Lifted form: solves the small LP
//   max t  s.t.  [Q z]_j >= t x_j,  H z <= 1,  z >= 0
// and reports 1/t - 1 as the violation when t < 1.
FeasibilityReport check_feasible(const PackingPolytope& p,
                                 const std::map<JobId, double>& x, double tol);

// Best-effort witness z for the same LP; empty when x is not feasible.
std::vector<double> feasibility_witness(const PackingPolytope& p,
                                        const std::map<JobId, double>& x, double tol);

}  // namespace polysched
