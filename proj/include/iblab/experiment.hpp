#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iblab/analysis.hpp"
#include "iblab/datasets.hpp"
#include "iblab/network.hpp"
#include "iblab/optim.hpp"
#include "json.hpp"

namespace iblab::exp {

using json = nlohmann::ordered_json;

enum class DatasetKind { gaussian, toy, boolean_task };
enum class ModelKind { two_layer, mlp };
enum class BatchMode { population, full, minibatch };

struct DatasetConfig {
    DatasetKind kind = DatasetKind::gaussian;
    datasets::GaussianSpec gaussian;
    datasets::ToySpec toy;
    datasets::BooleanTaskSpec boolean_task;
    std::size_t n_train = 0;  // finite-sample size (0 = population only)
    std::size_t n_test = 0;
};

struct ModelConfig {
    ModelKind kind = ModelKind::two_layer;
    std::size_t width = 100;
    double alpha = 1e-3;
    network::HeadMode head = network::HeadMode::random;
    std::vector<std::size_t> hidden;  // mlp hidden widths
    network::Activation activation = network::Activation::leaky_relu;
    double slope = 0.01;
};

struct TrainingConfig {
    long long steps = 1000;
    BatchMode batch = BatchMode::full;
    std::size_t minibatch_size = 0;
    network::LossKind loss = network::LossKind::correlation;
    long long record_every = 100;
    std::optional<double> target_loss;  // stop early once reached (checked on record)
};

struct AnalysisOptions {
    std::vector<std::string> metrics;
    int boundary_resolution = 256;
    std::size_t probe_n = 20000;
    std::size_t accuracy_n = 100000;
    int margin_bins = 40;
};

struct ExperimentConfig {
    int schema = 1;
    DatasetConfig dataset;
    ModelConfig model;
    optim::StepSpec optimizer;
    TrainingConfig training;
    AnalysisOptions analysis;
    std::uint64_t seed = 1;
    std::string out = "run";

    void validate() const;  // semantic checks beyond parsing
};

// Strict JSON binding: unknown keys anywhere are rejected with their path.
ExperimentConfig config_from_json(const json& j);
json config_to_json(const ExperimentConfig& cfg);

// Config errors carry exit-code-2 semantics.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunReport {
    json config_echo;
    json final_metrics;
    json theorem_verdicts;  // may be null
    std::vector<std::string> files;
    bool ok = false;
    double wall_clock_ms = 0.0;  // reported on stdout, not serialized

    json to_json() const;  // deterministic: excludes wall clock
};

// Executes train + analysis per the config, writes artifacts under the
// resolved output directory, returns the report (also written as
// report.json). Byte-identical report for identical (config, seed, build).
RunReport run(const ExperimentConfig& cfg);

// Output root resolution: IBLAB_OUT env var overrides the root for relative
// config paths.
std::string resolve_out_dir(const std::string& out);

// Named presets (materialized configs).
std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

struct SweepAxis {
    std::string field_path;  // e.g. "optimizer.beta1"
    std::vector<json> values;
};

SweepAxis parse_axis(const std::string& spec);

struct SweepResult {
    std::vector<RunReport> reports;
    std::vector<std::string> run_dirs;
    std::vector<std::string> errors;  // aligned with runs ("" = ok)
    std::string aggregate_csv;
};

// Cartesian product of the axes over the template config; partial failures
// are recorded per-run and the sweep continues.
SweepResult sweep(const ExperimentConfig& base, const std::vector<SweepAxis>& axes,
                  const std::string& out_dir, unsigned jobs = 0);

struct VerifyLine {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct VerifyResult {
    std::string suite;
    bool passed = false;
    std::vector<VerifyLine> lines;
    json report;  // regime flags, predictions, tolerances, verdicts
};

// suite in {prop2, theorem1, theorem2, theorem3, theorem4, adam-identities}.
VerifyResult verify(const std::string& suite, const std::string& out_dir = "",
                    unsigned jobs = 0);
std::vector<std::string> verify_suite_names();

// Finite-sample Gaussian accuracy-gap experiment (Adam vs GD, matched train
// loss, paired evaluation with common random numbers).
struct GapRunResult {
    double gap = 0.0;  // accuracy(adam) - accuracy(gd)
    double acc_gd = 0.0, acc_adam = 0.0;
    double loss_gd = 0.0, loss_adam = 0.0;
    long long steps_gd = 0, steps_adam = 0;
};
GapRunResult run_gaussian_gap(std::uint64_t seed, double target_loss = 0.15,
                              std::size_t eval_n = 400000);

// Boolean-features experiment: one optimizer, one seed; returns decoded
// correlations at the earliest snapshot reaching the given train loss.
struct BooleanRunResult {
    double decoded_core = 0.0;
    double decoded_spurious = 0.0;
    double test_accuracy = 0.0;
    double train_loss = 0.0;  // loss at the evaluated snapshot
    double best_loss = 0.0;   // lowest full-train loss seen
    long long snapshot_step = 0;
    bool reached_target = false;
};

struct BooleanTrace {
    std::vector<long long> steps;
    std::vector<double> losses;
    std::vector<Vec> snapshots;  // flat params at each loss eval
};

BooleanTrace train_boolean(optim::Algorithm algo, std::uint64_t seed,
                           long long max_steps);
BooleanRunResult evaluate_boolean_at(const BooleanTrace& trace, double target_loss,
                                     std::uint64_t seed);

}  // namespace iblab::exp
