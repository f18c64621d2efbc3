#include "polysched/report.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "polysched/blass.hpp"
#include "polysched/schedulers.hpp"

namespace polysched {

namespace fs = std::filesystem;
using nlohmann::json;

void ExperimentConfig::validate() const {
    if (schedulers.empty()) throw ValidationError("experiment config: empty scheduler list");
    if (instances.empty()) throw ValidationError("experiment config: no instances");
    for (double s : speeds)
        if (!(s >= 1.0)) throw ValidationError("experiment config: speeds must be >= 1");
    if (!(cert_s >= 1.0)) throw ValidationError("experiment config: cert_s must be >= 1");
    for (const auto& src : instances)
        if (src.file.empty() && !src.gen)
            throw ValidationError("experiment config: source '" + src.label +
                                  "' has neither file nor generator");
}

std::string ExperimentConfig::canonical_text() const {
    json doc;
    doc["schedulers"] = schedulers;
    doc["speeds"] = speeds;
    doc["certify_completion"] = certify_completion;
    doc["cert_s"] = cert_s;
    doc["blass_epsilon"] = blass_epsilon;
    doc["seed"] = seed;
    doc["instances"] = json::array();
    for (const auto& src : instances) {
        json o;
        o["label"] = src.label;
        if (!src.file.empty()) o["file"] = src.file;
        if (src.gen) {
            o["family"] = to_string(src.gen->family);
            o["n"] = src.gen->params.n;
            o["m"] = src.gen->params.m;
            o["seed"] = src.gen->seed;
            o["release_span"] = src.gen->params.release_span;
            o["unit_weights"] = src.gen->params.unit_weights;
        }
        doc["instances"].push_back(o);
    }
    return doc.dump();
}

Instance materialize(const ExperimentConfig::Source& src) {
    if (!src.file.empty()) return load_instance_file(src.file);
    return gen_family(src.gen->family, src.gen->params, src.gen->seed);
}

double max_solo_rate(const Instance& inst, const Job& j) {
    switch (inst.family) {
        case Family::multidim: {
            double x = 1.0;
            for (size_t d = 0; d < inst.capacities.size(); ++d)
                if (j.payload[d] > 0) x = std::min(x, inst.capacities[d] / j.payload[d]);
            return x;
        }
        case Family::all_or_nothing:
            return 1.0;
        case Family::unrelated:
        case Family::broadcast:
        case Family::tree_lb: {
            double x = 0.0;
            for (double s : j.payload) x = std::max(x, s);
            return x;
        }
    }
    return 1.0;
}

namespace {

struct CellResult {
    ReportRow row;
    std::optional<Trace> trace;
};

CellResult run_cell(const Instance& inst, const std::string& label,
                    const std::string& sched_name, double speed,
                    const ExperimentConfig& cfg) {
    CellResult cell;
    ReportRow& row = cell.row;
    row.instance_label = label;
    row.scheduler = sched_name;
    row.speed = speed;
    auto start = std::chrono::steady_clock::now();
    try {
        Trace tr;
        if (sched_name == "blass") {
            BlassConfig bc{cfg.blass_epsilon};
            tr = run_blass(inst, bc);
            row.speed = bc.eta();
        } else {
            auto sched = make_scheduler(sched_name, cfg.blass_epsilon);
            tr = simulate(inst, *sched, speed);
        }
        Metrics m = metrics(tr);
        row.weighted_completion = m.weighted_completion;
        row.weighted_flow = m.weighted_flow;
        row.total_flow = m.total_flow;
        row.makespan = m.makespan;
        row.ok = true;

        if (sched_name == "blass") {
            UnrelatedDualCert cert = blass_duals(tr, cfg.blass_epsilon);
            CertCheckReport crep = check_blass_cert(cert, tr);
            row.has_cert = true;
            row.cert_ok = crep.ok;
            row.cert_lower_bound = crep.lower_bound;
            row.certified_ratio = crep.certified_ratio;
            row.cert_max_residual = crep.max_constraint_residual;
        } else if (sched_name == "pf" && cfg.certify_completion && speed == 1.0) {
            SlottedTrace st = slot_trace(tr);
            CompletionDualCert cert = completion_duals(st, tr, cfg.cert_s);
            CertCheckReport crep = check_completion_cert(cert, st, tr);
            row.has_cert = true;
            row.cert_ok = crep.ok;
            row.cert_lower_bound = crep.lower_bound;
            row.certified_ratio = crep.certified_ratio;
            row.cert_max_residual = crep.max_constraint_residual;
        }
        cell.trace = std::move(tr);
    } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
    }
    row.runtime_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return cell;
}

}  // namespace

Report run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    Report rep;
    rep.config_hash = fnv1a_hex(cfg.canonical_text());

    if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);

    for (const auto& src : cfg.instances) {
        Instance inst;
        try {
            inst = materialize(src);
        } catch (const std::exception& e) {
            ReportRow row;
            row.instance_label = src.label;
            row.error = e.what();
            rep.rows.push_back(row);
            rep.any_error = true;
            continue;
        }
        for (const std::string& sched : cfg.schedulers) {
            for (double speed : cfg.speeds) {
                CellResult cell = run_cell(inst, src.label, sched, speed, cfg);
                if (!cell.row.ok) rep.any_error = true;
                if (cell.row.has_cert && !cell.row.cert_ok) rep.any_cert_violation = true;
                if (!cfg.out_dir.empty() && cell.trace) {
                    std::string name = src.label + "_" + sched + "_s" +
                                       std::to_string(speed) + ".trace.json";
                    save_trace_file(*cell.trace, (fs::path(cfg.out_dir) / name).string());
                }
                rep.rows.push_back(cell.row);
                if (sched == "blass") break;  // blass runs at its own eta
            }
        }
    }

    if (!cfg.out_dir.empty()) {
        std::ofstream csv(fs::path(cfg.out_dir) / "report.csv");
        csv << report_csv(rep);
        std::ofstream summary(fs::path(cfg.out_dir) / "summary.json");
        summary << report_summary_json(rep, cfg);
    }
    return rep;
}

std::string report_csv(const Report& rep) {
    std::ostringstream os;
    os << "config_hash,instance,scheduler,speed,ok,weighted_completion,weighted_flow,"
          "total_flow,makespan,has_cert,cert_ok,cert_lower_bound,certified_ratio,"
          "cert_max_residual,runtime_sec,error\n";
    for (const ReportRow& r : rep.rows) {
        os << rep.config_hash << ',' << r.instance_label << ',' << r.scheduler << ','
           << r.speed << ',' << (r.ok ? 1 : 0) << ',' << r.weighted_completion << ','
           << r.weighted_flow << ',' << r.total_flow << ',' << r.makespan << ','
           << (r.has_cert ? 1 : 0) << ',' << (r.cert_ok ? 1 : 0) << ','
           << r.cert_lower_bound << ',' << r.certified_ratio << ',' << r.cert_max_residual
           << ',' << r.runtime_sec << ',' << '"' << r.error << '"' << '\n';
    }
    return os.str();
}

std::string report_summary_json(const Report& rep, const ExperimentConfig& cfg) {
    json doc;
    doc["config_hash"] = rep.config_hash;
    doc["config"] = json::parse(cfg.canonical_text());
    doc["rows"] = rep.rows.size();
    doc["any_cert_violation"] = rep.any_cert_violation;
    doc["any_error"] = rep.any_error;
    return doc.dump(2) + "\n";
}

FlowSpeedTable compare_flowtime_speed(const ExperimentConfig& cfg) {
    cfg.validate();
    FlowSpeedTable table;
    table.config_hash = fnv1a_hex(cfg.canonical_text());

    for (const auto& src : cfg.instances) {
        Instance inst = materialize(src);
        double wsum_release = 0;
        double isolation_base = 0;  // sum w_j p_j / solo rate, at speed 1
        for (const Job& j : inst.jobs) {
            wsum_release += j.weight * j.release;
            isolation_base += j.weight * j.size / max_solo_rate(inst, j);
        }

        // The completion-time certificate of the speed-1 PF run feeds every
        // speed's bound through the stretch argument.
        double completion_lb = 0;
        {
            PfScheduler pf;
            Trace tr1 = simulate(inst, pf, 1.0);
            try {
                SlottedTrace st = slot_trace(tr1);
                CompletionDualCert cert = completion_duals(st, tr1, cfg.cert_s);
                completion_lb = std::max(0.0, cert.lower_bound);
            } catch (const ValidationError&) {
                completion_lb = 0;  // trace unsuitable for slotting; isolation bound only
            }
        }

        bool concat = inst.metadata.count("concat_copies") > 0;
        double concat_bound = 0;
        if (concat) {
            int copies = std::stoi(inst.metadata.at("concat_copies"));
            // Witness makespan 3/2 per copy of the one-level tree.
            double per_copy_flow =
                (static_cast<double>(inst.jobs.size()) / copies) * 1.5;
            concat_bound = copies * per_copy_flow;
        }

        for (double speed : cfg.speeds) {
            PfScheduler pf;
            Trace tr = simulate(inst, pf, speed);
            Metrics m = metrics(tr);
            FlowSpeedRow row;
            row.instance_label = src.label;
            row.speed = speed;
            row.weighted_flow = m.weighted_flow;
            row.lower_bound = std::max(isolation_base / speed,
                                       completion_lb / speed - wsum_release);
            row.concat_instance = concat;
            row.concat_offline_bound = concat_bound;
            row.degraded = concat && m.total_flow > concat_bound;
            table.rows.push_back(row);
        }
    }
    return table;
}

std::string flow_table_csv(const FlowSpeedTable& t) {
    std::ostringstream os;
    os << "config_hash,instance,speed,weighted_flow,certified_lower_bound,"
          "concat_instance,concat_offline_bound,degraded\n";
    for (const FlowSpeedRow& r : t.rows)
        os << t.config_hash << ',' << r.instance_label << ',' << r.speed << ','
           << r.weighted_flow << ',' << r.lower_bound << ',' << (r.concat_instance ? 1 : 0)
           << ',' << r.concat_offline_bound << ',' << (r.degraded ? 1 : 0) << '\n';
    return os.str();
}

}  // namespace polysched
