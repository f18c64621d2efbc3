#include <doctest.h>

#include "polysched/report.hpp"
#include "polysched/tree_lb.hpp"

using namespace polysched;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    GenSpec gen;
    gen.family = Family::unrelated;
    gen.params.n = 5;
    gen.params.m = 2;
    gen.params.unit_weights = true;
    gen.seed = 3;
    cfg.instances.push_back({"u5", "", gen});
    cfg.schedulers = {"pf", "blass"};
    cfg.speeds = {1.0};
    return cfg;
}

}  // namespace

TEST_CASE("experiment grids run every cell and certify") {
    ExperimentConfig cfg = small_config();
    Report rep = run_experiment(cfg);
    REQUIRE(rep.rows.size() == 2);
    for (const ReportRow& row : rep.rows) {
        CHECK(row.ok);
        CHECK(row.has_cert);
        CHECK(row.cert_ok);
        CHECK(row.weighted_completion > 0);
    }
    CHECK_FALSE(rep.any_cert_violation);
    CHECK_FALSE(rep.config_hash.empty());

    // Determinism: identical configs give identical results (runtimes aside).
    Report again = run_experiment(cfg);
    REQUIRE(again.rows.size() == rep.rows.size());
    for (size_t i = 0; i < rep.rows.size(); ++i) {
        CHECK(rep.rows[i].weighted_completion == again.rows[i].weighted_completion);
        CHECK(rep.rows[i].weighted_flow == again.rows[i].weighted_flow);
        CHECK(rep.rows[i].makespan == again.rows[i].makespan);
        CHECK(rep.rows[i].cert_lower_bound == again.rows[i].cert_lower_bound);
        CHECK(rep.rows[i].certified_ratio == again.rows[i].certified_ratio);
    }
    CHECK(again.config_hash == rep.config_hash);
}

TEST_CASE("per-cell errors are recorded without aborting the grid") {
    ExperimentConfig cfg = small_config();
    cfg.schedulers = {"drf", "pf"};  // drf rejects the unrelated family
    Report rep = run_experiment(cfg);
    REQUIRE(rep.rows.size() == 2);
    CHECK_FALSE(rep.rows[0].ok);
    CHECK_FALSE(rep.rows[0].error.empty());
    CHECK(rep.rows[1].ok);
    CHECK(rep.any_error);
}

TEST_CASE("config validation") {
    ExperimentConfig cfg = small_config();
    cfg.schedulers.clear();
    CHECK_THROWS_AS(cfg.validate(), ValidationError);

    ExperimentConfig cfg2 = small_config();
    cfg2.speeds = {0.5};
    CHECK_THROWS_AS(cfg2.validate(), ValidationError);

    ExperimentConfig cfg3 = small_config();
    cfg3.instances.push_back({"empty", "", std::nullopt});
    CHECK_THROWS_AS(cfg3.validate(), ValidationError);
}

TEST_CASE("flow-time vs speed table") {
    ExperimentConfig cfg;
    GenSpec gen;
    gen.family = Family::multidim;
    gen.params.n = 4;
    gen.params.m = 2;
    gen.seed = 11;
    cfg.instances.push_back({"m4", "", gen});
    cfg.schedulers = {"pf"};
    cfg.speeds = {1.0};
    FlowSpeedTable single = compare_flowtime_speed(cfg);
    REQUIRE(single.rows.size() == 1);
    CHECK(single.rows[0].lower_bound <= single.rows[0].weighted_flow + 1e-9);

    // Concatenated one-level trees degrade at low speed and improve with it.
    Instance base = export_tree_as_unrelated(gen_lower_bound_tree(1, 0));
    Instance cc = gen_flowtime_concat(base, 8, 1.0);
    save_instance_file(cc, "concat8.json");
    ExperimentConfig ccfg;
    ccfg.instances.push_back({"concat8", "concat8.json", std::nullopt});
    ccfg.schedulers = {"pf"};
    ccfg.speeds = {1.0, 2.0};
    FlowSpeedTable t = compare_flowtime_speed(ccfg);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0].concat_instance);
    CHECK(t.rows[0].degraded);  // PF at speed 1 exceeds the offline concat bound
    CHECK(t.rows[1].weighted_flow < t.rows[0].weighted_flow);
    CHECK_FALSE(t.rows[1].degraded);
    for (const FlowSpeedRow& r : t.rows)
        CHECK(r.lower_bound <= r.weighted_flow + 1e-9);
    CHECK(flow_table_csv(t).find("concat8") != std::string::npos);
}

TEST_CASE("max solo rate per family") {
    Instance md;
    md.family = Family::multidim;
    md.capacities = {1.0, 2.0};
    md.jobs = {{1, 1, 1, 0, {2.0, 1.0}}};
    md.validate();
    CHECK(max_solo_rate(md, md.jobs[0]) == doctest::Approx(0.5));

    Instance ur;
    ur.family = Family::unrelated;
    ur.machines = 2;
    ur.jobs = {{1, 1, 1, 0, {1.5, 2.5}}};
    ur.validate();
    CHECK(max_solo_rate(ur, ur.jobs[0]) == doctest::Approx(2.5));
}
