#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iris/corpus/manifest.hpp"
#include "iris/eval/metrics.hpp"
#include "iris/fcnseg/fcn.hpp"
#include "iris/ganseg/gan.hpp"
#include "iris/image.hpp"
#include "iris/mask.hpp"

namespace iris::pipeline {

enum class ModelKind { FCN, GAN };

std::string to_string(ModelKind m);
ModelKind model_from_string(const std::string& s);

/// Which manifest slice an experiment trains and tests on: one named
/// dataset, every dataset of one spectrum, or everything.
enum class ScopeKind { SingleDataset, MergedNir, MergedVis, MergedAll };

struct ExperimentScope {
    ScopeKind kind = ScopeKind::SingleDataset;
    std::string dataset;  // used by SingleDataset only
};

std::string to_string(const ExperimentScope& s);
ExperimentScope scope_from_string(const std::string& s);

struct ExperimentConfig {
    ModelKind model = ModelKind::FCN;
    ExperimentScope scope;
    double train_fraction = 0.8;
    std::string split_file;     // optional fixed train/test split, overrides the fraction
    int iterations = 2000;
    double learning_rate = 0;   // 0 = the model's default; overrides are echoed in the run config
    int gan_input_side = 256;
    bool use_roi_stage = false;         // off by default
    std::string detector_checkpoint;    // required when use_roi_stage is set
    std::string output_dir;
    std::uint64_t seed = 0;
};

struct DatasetAggregate {
    std::string dataset;
    eval::AggregateResult result;
};

struct RunResult {
    std::vector<eval::EvalRecord> records;  // test set, sorted by sample id
    eval::AggregateResult pooled;
    std::vector<DatasetAggregate> per_dataset;
    std::string best_id, worst_id;  // lowest / highest E on the test set
    std::string csv_path, report_path, run_config_path, trace_path, checkpoint_path;
    std::string best_overlay_path, worst_overlay_path;
};

/// Loads and concatenates manifests, rejecting duplicate sample ids.
std::vector<corpus::ImageSample> load_manifests(const std::vector<std::string>& paths);

/// Splits the scoped samples per dataset, optionally crops every image to
/// the detected eye region, trains the chosen model, scores the held-out
/// images at full resolution, and writes per-image CSV, an aggregate report
/// (per-dataset rows plus a pooled row for merged scopes), the loss trace,
/// the model checkpoint, and best/worst overlays into config.output_dir.
/// Identical samples, config and seed reproduce identical metrics.
///
/// Throws ConfigError for an unknown dataset, an empty scope or a missing
/// detector checkpoint; errors from a stage are rethrown with the stage name
/// and offending sample id prefixed.
RunResult run_experiment(const std::vector<corpus::ImageSample>& samples,
                         const ExperimentConfig& config);

RunResult run_experiment(const std::string& manifest_path, const ExperimentConfig& config);

/// Pads the image (edge replication, bottom/right) to the next multiple of
/// 32 per side, segments, and crops the prediction back, so any size works.
BinaryMask predict_fcn_padded(fcnseg::FcnModel& model, const Image& image);

/// Runs `iterations` adversarial steps (batch 1, epoch-shuffled order) over
/// the samples' image/mask pairs resized to the state's input side. Every
/// sample must carry a mask; ValidationError lists the ones that do not.
void train_gan(ganseg::GanState& state, const std::vector<corpus::ImageSample>& samples,
               int iterations, std::uint64_t order_seed);

}  // namespace iris::pipeline
