#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "iblab/experiment.hpp"

using namespace iblab;
using namespace iblab::exp;

namespace {

ExperimentConfig tiny_config(const std::string& out) {
    ExperimentConfig cfg;
    cfg.dataset.kind = DatasetKind::gaussian;
    cfg.dataset.gaussian = datasets::GaussianSpec(0.3, 2.0, 1.0, 0.1, 0.1, 0.1, 2);
    cfg.model.width = 8;
    cfg.model.alpha = 1e-3;
    cfg.training.batch = BatchMode::population;
    cfg.training.loss = network::LossKind::correlation;
    cfg.training.steps = 40;
    cfg.training.record_every = 10;
    cfg.optimizer = {optim::Algorithm::signgd, 0.01, 0.9, 0.999, 0.0};
    cfg.analysis.metrics = {};
    cfg.seed = 5;
    cfg.out = out;
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("config json round trip") {
    for (const auto& name : preset_names()) {
        const ExperimentConfig cfg = preset(name);
        const json emitted = config_to_json(cfg);
        const ExperimentConfig back = config_from_json(emitted);
        CHECK(config_to_json(back) == emitted);
    }
}

TEST_CASE("unknown keys are rejected with their path") {
    json j = config_to_json(preset("toy-signgd"));
    j["dataset"]["bogus"] = 1;
    try {
        config_from_json(j);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("dataset.bogus") != std::string::npos);
    }
    json j2 = config_to_json(preset("toy-signgd"));
    j2["frobnicate"] = true;
    CHECK_THROWS_AS(config_from_json(j2), ConfigError);
}

TEST_CASE("invalid configs carry field-path messages") {
    json j = config_to_json(preset("fig2-gd"));
    j["optimizer"]["eta"] = -1.0;
    CHECK_THROWS(config_from_json(j));
    json j3 = config_to_json(preset("fig2-gd"));
    j3["training"]["loss"] = "hinge";
    try {
        config_from_json(j3);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("training.loss") != std::string::npos);
    }
}

TEST_CASE("runs are byte-deterministic per (config, seed)") {
    namespace fs = std::filesystem;
    fs::remove_all("exp_det_a");
    fs::remove_all("exp_det_b");
    auto cfg_a = tiny_config("exp_det_a");
    auto cfg_b = tiny_config("exp_det_b");
    const auto rep_a = run(cfg_a);
    const auto rep_b = run(cfg_b);
    CHECK(rep_a.final_metrics == rep_b.final_metrics);
    // reports are identical except the echoed output path
    auto ja = rep_a.to_json();
    auto jb = rep_b.to_json();
    ja["config"]["out"] = "";
    jb["config"]["out"] = "";
    CHECK(ja.dump() == jb.dump());
    CHECK(slurp("exp_det_a/trajectory.csv") == slurp("exp_det_b/trajectory.csv"));
    CHECK(slurp("exp_det_a/checkpoint.csv") == slurp("exp_det_b/checkpoint.csv"));
    // and rerunning in place reproduces the same bytes
    const std::string before = slurp("exp_det_a/report.json");
    run(cfg_a);
    CHECK(slurp("exp_det_a/report.json") == before);
}

TEST_CASE("empty metrics leaves the training log only") {
    namespace fs = std::filesystem;
    fs::remove_all("exp_minimal");
    auto cfg = tiny_config("exp_minimal");
    const auto rep = run(cfg);
    CHECK(rep.ok);
    const std::vector<std::string> want{"config.json", "trajectory.csv",
                                        "checkpoint.csv", "checkpoint.json",
                                        "report.json"};
    CHECK(rep.files == want);
    for (const auto& f : rep.files) CHECK(fs::exists(fs::path("exp_minimal") / f));
}

TEST_CASE("IBLAB_OUT overrides relative output roots") {
    CHECK(resolve_out_dir("/abs/path") == "/abs/path");
    ::setenv("IBLAB_OUT", "rooted", 1);
    CHECK(resolve_out_dir("rel") == "rooted/rel");
    ::unsetenv("IBLAB_OUT");
    CHECK(resolve_out_dir("rel") == "rel");
}

TEST_CASE("single-point sweep reproduces a plain run") {
    namespace fs = std::filesystem;
    fs::remove_all("exp_sweep_single");
    fs::remove_all("exp_single_run");
    auto base = tiny_config("ignored");
    const auto sw =
        sweep(base, {parse_axis("seed=5")}, "exp_sweep_single", 1);
    REQUIRE(sw.reports.size() == 1);
    CHECK(sw.errors[0].empty());
    auto direct_cfg = tiny_config("exp_single_run");
    const auto direct = run(direct_cfg);
    CHECK(sw.reports[0].final_metrics == direct.final_metrics);
    CHECK(fs::exists(sw.aggregate_csv));
}

TEST_CASE("sweep records partial failures and continues") {
    namespace fs = std::filesystem;
    fs::remove_all("exp_sweep_fail");
    auto base = tiny_config("ignored");
    const auto sw = sweep(base, {parse_axis("optimizer.eta=-1.0,0.01")},
                          "exp_sweep_fail", 1);
    REQUIRE(sw.reports.size() == 2);
    CHECK(!sw.errors[0].empty());
    CHECK(sw.errors[1].empty());
}

TEST_CASE("axis parsing") {
    const auto a = parse_axis("optimizer.beta1=0.9,0.99,0.9999");
    CHECK(a.field_path == "optimizer.beta1");
    REQUIRE(a.values.size() == 3);
    CHECK(a.values[0].get<double>() == 0.9);
    const auto b = parse_axis("seed=1,2,3");
    CHECK(b.values[2].get<long long>() == 3);
    CHECK_THROWS_AS(parse_axis("nonsense"), ConfigError);
    CHECK_THROWS_AS(sweep(tiny_config("x"), {parse_axis("no.such.field=1")},
                          "exp_sweep_bad", 1),
                    ConfigError);
}

TEST_CASE("presets are listed and unknown names rejected") {
    const auto names = preset_names();
    CHECK(names.size() == 10);
    for (const auto& n : names) CHECK_NOTHROW(preset(n));
    CHECK_THROWS_AS(preset("not-a-preset"), ConfigError);
}

TEST_CASE("verify suite names and a fast suite") {
    CHECK(verify_suite_names().size() == 6);
    const auto res = verify("adam-identities");
    CHECK(res.passed);
    CHECK(res.report["checks"].size() == 3);
    CHECK_THROWS_AS(verify("theorem9"), ConfigError);
}

TEST_CASE("population mode rejects misconfigured datasets") {
    auto cfg = tiny_config("ignored2");
    cfg.training.loss = network::LossKind::logistic;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.training.loss = network::LossKind::correlation;
    cfg.dataset.gaussian = datasets::GaussianSpec(0.3, 2.0, 4.0, 0.2, 0.1, 0.1, 2);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

}
