// polysched: generate PSP instances, run schedulers, certify traces, and
// sweep experiment grids.
//
// Exit codes: 0 success, 2 certificate violation, 3 configuration error.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "polysched/blass.hpp"
#include "polysched/report.hpp"
#include "polysched/schedulers.hpp"
#include "polysched/tree_lb.hpp"

using namespace polysched;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCertViolation = 2;
constexpr int kExitConfigError = 3;

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
}

int cmd_gen(const std::string& family_s, int n, int m, uint64_t seed, double release_span,
            bool unit_weights, int depth, int copies, double gap, const std::string& out) {
    if (family_s == "tree_lb") {
        TreeInstance tree = gen_lower_bound_tree(depth, seed);
        double witness = verify_tree_witness(tree);
        if (depth == 1) {
            Instance inst = export_tree_as_unrelated(tree);
            inst.metadata["witness_makespan"] = std::to_string(witness);
            if (copies > 1) inst = gen_flowtime_concat(inst, copies, gap);
            write_file(out, emit_instance(inst));
        } else {
            // Deeper trees have no fixed-machine form; emit the tree document.
            nlohmann::json doc;
            doc["kind"] = "tree_lb";
            doc["depth"] = tree.depth;
            doc["seed"] = tree.seed;
            doc["fanout"] = tree.fanout;
            doc["witness_makespan"] = witness;
            doc["jobs"] = tree.job_count();
            doc["leaf_parents"] = nlohmann::json::array();
            for (const auto& lp : tree.leaf_parents)
                doc["leaf_parents"].push_back({{"node", lp.node},
                                               {"eta", lp.eta},
                                               {"job_ids", lp.job_ids},
                                               {"job_sizes", lp.job_sizes}});
            write_file(out, doc.dump(2) + "\n");
        }
        std::cout << "tree depth " << depth << ": " << tree.job_count()
                  << " jobs, witness makespan " << witness << "\n";
        return kExitOk;
    }

    GenParams params;
    params.n = n;
    params.m = m;
    params.release_span = release_span;
    params.unit_weights = unit_weights;
    Instance inst = gen_family(family_from_string(family_s), params, seed);
    if (copies > 1) inst = gen_flowtime_concat(inst, copies, gap);
    write_file(out, emit_instance(inst));
    std::cout << "wrote " << out << " (" << inst.jobs.size() << " jobs)\n";
    return kExitOk;
}

int cmd_run(const std::string& instance_path, const std::string& sched_name, double speed,
            double epsilon, const std::string& out) {
    Instance inst = load_instance_file(instance_path);
    Trace tr;
    if (sched_name == "blass") {
        BlassConfig cfg{epsilon};
        tr = run_blass(inst, cfg);
    } else {
        auto sched = make_scheduler(sched_name, epsilon);
        tr = simulate(inst, *sched, speed);
    }
    Metrics m = metrics(tr);
    std::cout << "scheduler=" << tr.scheduler << " speed=" << tr.speed
              << " sum_wC=" << m.weighted_completion << " sum_wF=" << m.weighted_flow
              << " sum_F=" << m.total_flow << " makespan=" << m.makespan << "\n";
    if (!out.empty()) save_trace_file(tr, out);
    return kExitOk;
}

int cmd_certify(const std::string& trace_path, double cert_s, double epsilon,
                const std::string& out) {
    Trace tr = load_trace_file(trace_path);
    CertCheckReport rep;
    std::string exported;
    if (tr.scheduler == "blass") {
        double eps = epsilon > 0 ? epsilon : tr.epsilon;
        UnrelatedDualCert cert = blass_duals(tr, eps);
        rep = check_blass_cert(cert, tr);
        exported = emit_blass_cert(cert, rep);
    } else {
        SlottedTrace st = slot_trace(tr);
        CompletionDualCert cert = completion_duals(st, tr, cert_s);
        rep = check_completion_cert(cert, st, tr);
        exported = emit_completion_cert(cert, rep);
    }
    std::cout << rep.summary << "\n";
    for (const CertViolation& v : rep.violations)
        std::cout << "  violation: " << v.what << " job=" << v.job << " slot=" << v.slot
                  << " row=" << v.row << " lhs=" << v.lhs << " rhs=" << v.rhs << "\n";
    if (!out.empty()) write_file(out, exported);
    return rep.ok ? kExitOk : kExitCertViolation;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config '" + path + "'");
    nlohmann::json doc = nlohmann::json::parse(in);
    ExperimentConfig cfg;
    for (const auto& o : doc.at("instances")) {
        ExperimentConfig::Source src;
        src.label = o.at("label").get<std::string>();
        if (o.contains("file")) src.file = o["file"].get<std::string>();
        if (o.contains("family")) {
            GenSpec gen;
            gen.family = family_from_string(o["family"].get<std::string>());
            gen.params.n = o.value("n", 4);
            gen.params.m = o.value("m", 2);
            gen.params.release_span = o.value("release_span", 0.0);
            gen.params.unit_weights = o.value("unit_weights", false);
            gen.seed = o.value("seed", 0ull);
            src.gen = gen;
        }
        cfg.instances.push_back(src);
    }
    cfg.schedulers = doc.at("schedulers").get<std::vector<std::string>>();
    if (doc.contains("speeds")) cfg.speeds = doc["speeds"].get<std::vector<double>>();
    cfg.certify_completion = doc.value("certify_completion", true);
    cfg.cert_s = doc.value("cert_s", 32.0);
    cfg.blass_epsilon = doc.value("epsilon", 0.5);
    cfg.out_dir = doc.value("out_dir", std::string());
    cfg.seed = doc.value("seed", 0ull);
    return cfg;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir, bool flowtime) {
    ExperimentConfig cfg = load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (flowtime) {
        FlowSpeedTable t = compare_flowtime_speed(cfg);
        std::string csv = flow_table_csv(t);
        if (!cfg.out_dir.empty()) {
            fs::create_directories(cfg.out_dir);
            write_file((fs::path(cfg.out_dir) / "flowtime_speed.csv").string(), csv);
        }
        std::cout << csv;
        return kExitOk;
    }
    Report rep = run_experiment(cfg);
    std::cout << report_csv(rep);
    if (rep.any_cert_violation) return kExitCertViolation;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"polysched: non-clairvoyant scheduling under packing constraints"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen", "generate an instance");
    std::string family = "multidim", gen_out = "instance.json";
    int n = 4, m = 2, depth = 1, copies = 1;
    uint64_t seed = 0;
    double release_span = 0, gap = 1.0;
    bool unit_weights = false;
    gen->add_option("--family", family, "multidim|all_or_nothing|unrelated|broadcast|tree_lb");
    gen->add_option("--n", n, "number of jobs");
    gen->add_option("--m", m, "resources / machines / pages");
    gen->add_option("--seed", seed, "generator seed");
    gen->add_option("--release-span", release_span, "releases uniform in [0, span]");
    gen->add_flag("--unit-weights", unit_weights, "all weights 1");
    gen->add_option("--depth", depth, "tree_lb depth (1 or 2)");
    gen->add_option("--copies", copies, "flow-time concatenation copies");
    gen->add_option("--gap", gap, "concatenation release gap");
    gen->add_option("-o,--out", gen_out, "output file");

    auto* run = app.add_subcommand("run", "simulate a scheduler on an instance");
    std::string run_instance, run_sched = "pf", run_out;
    double run_speed = 1.0, run_eps = 0.5;
    run->add_option("--instance", run_instance, "instance file")->required();
    run->add_option("--sched", run_sched, "pf|maxmin|drf|blass");
    run->add_option("--speed", run_speed, "speed augmentation (>= 1)");
    run->add_option("--epsilon", run_eps, "blass epsilon (k = 1/eps)");
    run->add_option("-o,--out", run_out, "trace output file");

    auto* certify = app.add_subcommand("certify", "build and verify a dual certificate");
    std::string cert_trace, cert_out;
    double cert_s = 32.0, cert_eps = 0.0;
    certify->add_option("--trace", cert_trace, "trace file")->required();
    certify->add_option("--cert-s", cert_s, "completion-time dual speed parameter");
    certify->add_option("--epsilon", cert_eps, "blass epsilon override");
    certify->add_option("-o,--out", cert_out, "certificate output file");

    auto* sweep = app.add_subcommand("sweep", "run an experiment grid from a config");
    std::string sweep_config, sweep_out;
    bool sweep_flow = false;
    sweep->add_option("--config", sweep_config, "experiment config JSON")->required();
    sweep->add_option("--out", sweep_out, "output directory");
    sweep->add_flag("--flowtime", sweep_flow, "PF flow time vs speed table");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_gen(family, n, m, seed, release_span, unit_weights, depth, copies, gap,
                           gen_out);
        if (run->parsed()) return cmd_run(run_instance, run_sched, run_speed, run_eps, run_out);
        if (certify->parsed()) return cmd_certify(cert_trace, cert_s, cert_eps, cert_out);
        if (sweep->parsed()) return cmd_sweep(sweep_config, sweep_out, sweep_flow);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
