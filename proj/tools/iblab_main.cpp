#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "iblab/analysis.hpp"
#include "iblab/experiment.hpp"
#include "iblab/parallel.hpp"

using namespace iblab;

namespace {

exp::ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw exp::ConfigError("cannot open config: " + path);
    exp::json j;
    try {
        j = exp::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw exp::ConfigError(std::string("config parse error: ") + e.what());
    }
    return exp::config_from_json(j);
}

void print_report_summary(const exp::RunReport& rep, const std::string& dir) {
    std::cout << "run: " << dir << "\n";
    std::cout << "  metrics: " << rep.final_metrics.dump() << "\n";
    std::printf("  wall clock: %.1f ms\n", rep.wall_clock_ms);
}

int print_verify(const exp::VerifyResult& res) {
    for (const auto& line : res.lines)
        std::cout << (line.passed ? "[PASS] " : "[FAIL] ") << res.suite << ": "
                  << line.name << " -- " << line.detail << "\n";
    std::cout << (res.passed ? "[PASS] " : "[FAIL] ") << "suite " << res.suite << "\n";
    return res.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical lab for optimizer implicit-bias experiments"};
    app.require_subcommand(1);

    std::string config_path, out_override, suite, preset_name, run_dir, plot_out;
    std::uint64_t seed = 0;
    bool seed_set = false, print_config = false;
    unsigned jobs = 0;
    long long n_samples = 1000;
    std::vector<std::string> axes_specs;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", out_override, "output directory override");
        cmd->add_option("--jobs", jobs, "worker threads (0 = hardware)");
        cmd->add_option_function<std::uint64_t>(
            "--seed", [&](const std::uint64_t& v) { seed = v; seed_set = true; },
            "seed override");
    };

    auto* c_sample = app.add_subcommand("sample", "draw a dataset and dump CSV");
    c_sample->add_option("--config", config_path, "config JSON")->required();
    c_sample->add_option("--n", n_samples, "number of samples");
    add_common(c_sample);

    auto* c_train = app.add_subcommand("train", "run one experiment config");
    c_train->add_option("--config", config_path, "config JSON")->required();
    add_common(c_train);

    auto* c_verify = app.add_subcommand("verify", "run a theorem verification suite");
    c_verify->add_option("suite", suite, "prop2|theorem1|theorem2|theorem3|theorem4|adam-identities")
        ->required();
    add_common(c_verify);

    auto* c_sweep = app.add_subcommand("sweep", "cartesian sweep over config fields");
    c_sweep->add_option("--config", config_path, "template config JSON")->required();
    c_sweep->add_option("--axis", axes_specs, "axis spec path=v1,v2,... (repeatable)")
        ->required();
    add_common(c_sweep);

    auto* c_plot = app.add_subcommand("plot", "re-render boundary SVG from a run dir");
    c_plot->add_option("--run", run_dir, "run directory with checkpoint + config")
        ->required();
    c_plot->add_option("--to", plot_out, "output SVG path (default run/boundary.svg)");
    add_common(c_plot);

    auto* c_preset = app.add_subcommand("preset", "run (or print) a named preset");
    c_preset->add_option("name", preset_name, "preset name")->required();
    c_preset->add_flag("--print-config", print_config, "print config JSON and exit");
    add_common(c_preset);

    auto* c_list = app.add_subcommand("list", "list presets and verify suites");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_list->parsed()) {
            std::cout << "presets:";
            for (const auto& n : exp::preset_names()) std::cout << " " << n;
            std::cout << "\nverify suites:";
            for (const auto& n : exp::verify_suite_names()) std::cout << " " << n;
            std::cout << "\n";
            return 0;
        }
        if (c_sample->parsed()) {
            exp::ExperimentConfig cfg = load_config(config_path);
            if (seed_set) cfg.seed = seed;
            if (!out_override.empty()) cfg.out = out_override;
            const std::string dir = exp::resolve_out_dir(cfg.out);
            std::filesystem::create_directories(dir);
            const auto s = derive_seed(cfg.seed, "sample-cli");
            if (cfg.dataset.kind == exp::DatasetKind::gaussian) {
                const auto samples =
                    datasets::sample_gaussian(cfg.dataset.gaussian, n_samples, s);
                datasets::dump_samples_csv(samples, cfg.dataset.gaussian.dim,
                                           dir + "/samples.csv");
            } else if (cfg.dataset.kind == exp::DatasetKind::toy) {
                const auto samples = datasets::sample_toy(cfg.dataset.toy, n_samples, s);
                datasets::dump_samples_csv(samples, 2, dir + "/samples.csv");
            } else {
                const auto samples =
                    datasets::sample_boolean(cfg.dataset.boolean_task, n_samples, s);
                datasets::dump_boolean_csv(samples, cfg.dataset.boolean_task.dim,
                                           dir + "/samples.csv");
            }
            std::cout << "wrote " << dir << "/samples.csv\n";
            return 0;
        }
        if (c_train->parsed()) {
            exp::ExperimentConfig cfg = load_config(config_path);
            if (seed_set) cfg.seed = seed;
            if (!out_override.empty()) cfg.out = out_override;
            const auto rep = exp::run(cfg);
            print_report_summary(rep, exp::resolve_out_dir(cfg.out));
            return rep.ok ? 0 : 1;
        }
        if (c_verify->parsed()) {
            const std::string dir =
                out_override.empty() ? "runs/verify-" + suite : out_override;
            const auto res = exp::verify(suite, exp::resolve_out_dir(dir), jobs);
            std::filesystem::create_directories(exp::resolve_out_dir(dir));
            std::ofstream out(exp::resolve_out_dir(dir) + "/verdict.json");
            out << res.report.dump(2) << "\n";
            return print_verify(res);
        }
        if (c_sweep->parsed()) {
            exp::ExperimentConfig cfg = load_config(config_path);
            if (seed_set) cfg.seed = seed;
            std::vector<exp::SweepAxis> axes;
            for (const auto& a : axes_specs) axes.push_back(exp::parse_axis(a));
            const std::string dir = out_override.empty() ? "runs/sweep" : out_override;
            const auto result = exp::sweep(cfg, axes, dir, jobs);
            std::size_t failed = 0;
            for (const auto& e : result.errors)
                if (!e.empty()) ++failed;
            std::cout << "sweep: " << result.reports.size() << " runs, " << failed
                      << " failed; aggregate: " << result.aggregate_csv << "\n";
            return failed == 0 ? 0 : 1;
        }
        if (c_plot->parsed()) {
            std::ifstream cin_(run_dir + "/config.json");
            if (!cin_) throw exp::ConfigError("plot: missing config.json in " + run_dir);
            const auto cfg = exp::config_from_json(exp::json::parse(cin_));
            const auto net = network::load_checkpoint(run_dir, "checkpoint");
            double mu1, mu3;
            if (cfg.dataset.kind == exp::DatasetKind::gaussian) {
                mu1 = cfg.dataset.gaussian.mu1;
                mu3 = cfg.dataset.gaussian.mu3;
            } else if (cfg.dataset.kind == exp::DatasetKind::toy) {
                mu1 = cfg.dataset.toy.mu1();
                mu3 = cfg.dataset.toy.mu3();
            } else {
                throw exp::ConfigError("plot: boolean runs have no 2-D boundary");
            }
            const double w = 3.0 * std::max(mu1, mu3);
            const auto trace = analysis::extract_boundary(
                net, -w, w, cfg.analysis.boundary_resolution);
            std::optional<analysis::BoundaryTrace> bayes;
            if (cfg.dataset.kind == exp::DatasetKind::gaussian) {
                const auto spec = cfg.dataset.gaussian;
                bayes = analysis::extract_boundary_field(
                    [spec](double x, double y) {
                        return datasets::bayes_decision_value(spec, x, y);
                    },
                    -w, w, cfg.analysis.boundary_resolution);
            } else {
                const auto spec = cfg.dataset.toy;
                bayes = analysis::extract_boundary_field(
                    [spec](double x, double y) {
                        return datasets::toy_bayes_decision_value(spec, x, y);
                    },
                    -w, w, cfg.analysis.boundary_resolution);
            }
            std::vector<datasets::Sample> scatter;
            if (cfg.dataset.kind == exp::DatasetKind::gaussian)
                scatter = datasets::sample_gaussian(cfg.dataset.gaussian, 1000,
                                                    derive_seed(cfg.seed, "scatter"));
            else
                scatter = datasets::sample_toy(cfg.dataset.toy, 200,
                                               derive_seed(cfg.seed, "scatter"));
            const std::string to =
                plot_out.empty() ? run_dir + "/boundary.svg" : plot_out;
            analysis::boundary_to_svg(trace, scatter, bayes, to);
            std::cout << "wrote " << to << "\n";
            return 0;
        }
        if (c_preset->parsed()) {
            exp::ExperimentConfig cfg = exp::preset(preset_name);
            if (seed_set) cfg.seed = seed;
            if (!out_override.empty()) cfg.out = out_override;
            if (print_config) {
                std::cout << exp::config_to_json(cfg).dump(2) << "\n";
                return 0;
            }
            const auto rep = exp::run(cfg);
            print_report_summary(rep, exp::resolve_out_dir(cfg.out));
            return rep.ok ? 0 : 1;
        }
    } catch (const exp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
