#pragma once

#include <optional>
#include <string>
#include <vector>

#include "polysched/certify.hpp"
#include "polysched/instance.hpp"

namespace polysched {

struct GenSpec {
    Family family = Family::multidim;
    GenParams params;
    uint64_t seed = 0;
};

struct ExperimentConfig {
    struct Source {
        std::string label;
        std::string file;  // empty => generated
        std::optional<GenSpec> gen;
    };
    std::vector<Source> instances;
    std::vector<std::string> schedulers;
    std::vector<double> speeds{1.0};
    bool certify_completion = true;
    double cert_s = 32;
    double blass_epsilon = 0.5;
    std::string out_dir;  // empty => no files written
    uint64_t seed = 0;

    void validate() const;
    std::string canonical_text() const;  // hashed into every report
};

struct ReportRow {
    std::string instance_label;
    std::string scheduler;
    double speed = 1;
    bool ok = false;
    std::string error;
    double weighted_completion = 0, weighted_flow = 0, total_flow = 0, makespan = 0;
    bool has_cert = false;
    bool cert_ok = false;
    double cert_lower_bound = 0, certified_ratio = 0, cert_max_residual = 0;
    double runtime_sec = 0;
};

struct Report {
    std::string config_hash;
    std::vector<ReportRow> rows;
    bool any_cert_violation = false;
    bool any_error = false;
};

// Runs the (instance x scheduler x speed) grid; per-cell errors are recorded
// and the run continues. Deterministic for a fixed config.
Report run_experiment(const ExperimentConfig& cfg);

std::string report_csv(const Report& rep);
std::string report_summary_json(const Report& rep, const ExperimentConfig& cfg);

// PF flow time across a speed grid with certified lower bounds per speed.
struct FlowSpeedRow {
    std::string instance_label;
    double speed = 1;
    double weighted_flow = 0;
    double lower_bound = 0;  // valid for the optimum at this speed
    bool concat_instance = false;
    double concat_offline_bound = 0;  // copies * per-copy witness flow
    bool degraded = false;            // PF flow exceeds the offline concat bound
};

struct FlowSpeedTable {
    std::string config_hash;
    std::vector<FlowSpeedRow> rows;
};

FlowSpeedTable compare_flowtime_speed(const ExperimentConfig& cfg);
std::string flow_table_csv(const FlowSpeedTable& t);

// Largest rate the job could get running alone (used by the isolation bound).
double max_solo_rate(const Instance& inst, const Job& j);

Instance materialize(const ExperimentConfig::Source& src);

}  // namespace polysched
