#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "iris/corpus/manifest.hpp"
#include "iris/corpus/mask_io.hpp"
#include "iris/corpus/split.hpp"
#include "iris/error.hpp"
#include "iris/eval/metrics.hpp"
#include "iris/fcnseg/fcn.hpp"
#include "iris/ganseg/gan.hpp"
#include "iris/pipeline/compare.hpp"
#include "iris/pipeline/experiment.hpp"
#include "iris/pipeline/overlay.hpp"
#include "iris/pipeline/synth.hpp"
#include "iris/roi/detector.hpp"
#include "iris/roi/geometry.hpp"

namespace {

using namespace iris;

std::ostream& metric(std::ostream& out, double v) {
    return out << std::fixed << std::setprecision(6) << v;
}

// Output paths given on the command line get their directories created.
std::string prepared(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(parent, ec);
        if (ec) throw IoError("cannot create " + parent.string() + ": " + ec.message());
    }
    return path;
}

void print_aggregate(const std::string& label, const eval::AggregateResult& agg) {
    std::cout << label << ": n=" << agg.n << " E ";
    metric(std::cout, agg.mean_e) << " std ";
    metric(std::cout, agg.std_e) << " F1 ";
    metric(std::cout, agg.mean_f1) << " std ";
    metric(std::cout, agg.std_f1);
    if (agg.undefined_f1 > 0) std::cout << " (" << agg.undefined_f1 << " undefined F1)";
    std::cout << "\n";
}

void print_t_test(const std::string& label, const eval::TTestResult& t) {
    std::cout << label << ": t=";
    metric(std::cout, t.t_statistic) << " df=" << t.degrees_of_freedom << " p=";
    metric(std::cout, t.p_value) << (t.significant ? " significant" : " not significant")
                                 << " at alpha=" << t.alpha << "\n";
}

// Shared by `predict`: detect the eye region, segment the crop, paste back.
BinaryMask predict_with_roi(const std::string& detector_path, const Image& image,
                            const std::function<BinaryMask(const Image&)>& segment) {
    const auto detector = roi::load_detector(detector_path);
    const auto detections = roi::predict_detections(*detector.model, detector.anchors, image);
    const auto selected = roi::select_detection(detections, image.width, image.height);
    const auto box = selected ? roi::pad_and_square(*selected, image.width, image.height)
                              : roi::full_image_roi(image.width, image.height);
    const BinaryMask crop_pred = segment(roi::crop_image(image, box));
    return roi::paste_mask(crop_pred, roi::crop_transform(box, image.width, image.height));
}

int run_cli(int argc, char** argv) {
    CLI::App app{"iris segmentation pipeline: synthetic data, detection, FCN/GAN training, "
                 "evaluation and reporting"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic eye dataset");
    int synth_n = 40, synth_side = 128;
    std::uint64_t synth_seed = 0;
    std::string synth_out, synth_name = "synthetic", synth_spectrum = "nir";
    synth->add_option("--n", synth_n, "number of images")->required();
    synth->add_option("--side", synth_side, "image side (power of two >= 64)");
    synth->add_option("--seed", synth_seed, "generation seed");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--name", synth_name, "dataset name written to the manifest");
    synth->add_option("--spectrum", synth_spectrum, "nir (grayscale) or vis (color)")
        ->check(CLI::IsMember({"nir", "vis"}));

    // split
    auto* split = app.add_subcommand("split", "write a seeded train/test split");
    std::string split_manifest, split_out;
    double split_fraction = 0.8;
    std::uint64_t split_seed = 0;
    split->add_option("--manifest", split_manifest, "manifest file")->required();
    split->add_option("--fraction", split_fraction, "train fraction");
    split->add_option("--seed", split_seed, "shuffle seed");
    split->add_option("--out", split_out, "split file to write")->required();

    // train-detector
    auto* trdet = app.add_subcommand("train-detector", "train the eye-region detector");
    std::string trdet_manifest, trdet_out, trdet_trace;
    int trdet_iterations = 500, trdet_channels = 1;
    double trdet_lr = 1e-3;
    std::uint64_t trdet_seed = 0;
    trdet->add_option("--manifest", trdet_manifest, "manifest file")->required();
    trdet->add_option("--out", trdet_out, "checkpoint to write")->required();
    trdet->add_option("--iterations", trdet_iterations, "training iterations");
    trdet->add_option("--lr", trdet_lr, "learning rate");
    trdet->add_option("--channels", trdet_channels, "input channels (1 or 3)");
    trdet->add_option("--seed", trdet_seed, "initialization/shuffle seed");
    trdet->add_option("--trace", trdet_trace, "loss trace file to write");

    // train
    auto* train = app.add_subcommand("train", "train a segmentation model on a whole manifest");
    std::string train_model, train_manifest, train_out, train_trace;
    int train_iterations = 0, train_gan_side = 256;
    double train_lr = 0;
    std::uint64_t train_seed = 0;
    train->add_option("--model", train_model, "fcn or gan")
        ->required()
        ->check(CLI::IsMember({"fcn", "gan"}));
    train->add_option("--manifest", train_manifest, "manifest file")->required();
    train->add_option("--out", train_out, "checkpoint to write")->required();
    train->add_option("--iterations", train_iterations, "training iterations (default: the model's)");
    train->add_option("--lr", train_lr, "learning rate (default: the model's)");
    train->add_option("--gan-side", train_gan_side, "gan operating resolution");
    train->add_option("--seed", train_seed, "initialization/shuffle seed");
    train->add_option("--trace", train_trace, "loss trace file to write");

    // predict
    auto* predict = app.add_subcommand("predict", "segment one image");
    std::string pred_model, pred_checkpoint, pred_image, pred_out, pred_detector;
    predict->add_option("--model", pred_model, "fcn or gan")
        ->required()
        ->check(CLI::IsMember({"fcn", "gan"}));
    predict->add_option("--checkpoint", pred_checkpoint, "trained model checkpoint")->required();
    predict->add_option("--image", pred_image, "input image")->required();
    predict->add_option("--out", pred_out, "mask file to write")->required();
    predict->add_option("--detector", pred_detector,
                        "detector checkpoint; segment the detected eye region only");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "score predicted masks against ground truth");
    std::string eval_manifest, eval_pred_dir, eval_csv, eval_report;
    evaluate->add_option("--manifest", eval_manifest, "manifest with ground-truth masks")
        ->required();
    evaluate->add_option("--pred-dir", eval_pred_dir, "directory of <id>.png predictions")
        ->required();
    evaluate->add_option("--csv", eval_csv, "per-image CSV to write");
    evaluate->add_option("--report", eval_report, "aggregate report to write");

    // compare
    auto* compare = app.add_subcommand("compare", "paired t-tests between two per-image CSVs");
    std::string cmp_a, cmp_b;
    double cmp_alpha = 0.05;
    compare->add_option("--a", cmp_a, "first per-image CSV")->required();
    compare->add_option("--b", cmp_b, "second per-image CSV")->required();
    compare->add_option("--alpha", cmp_alpha, "significance level");

    // overlay
    auto* overlay = app.add_subcommand("overlay", "render green/red error overlay");
    std::string ovl_image, ovl_pred, ovl_truth, ovl_out;
    overlay->add_option("--image", ovl_image, "base image")->required();
    overlay->add_option("--pred", ovl_pred, "predicted mask")->required();
    overlay->add_option("--truth", ovl_truth, "ground-truth mask")->required();
    overlay->add_option("--out", ovl_out, "overlay image to write")->required();

    // run. Everything is also loadable from a key=value file via --config;
    // explicit flags win, and --seed must come from one of the two.
    auto* run = app.add_subcommand("run", "full experiment: split, train, evaluate, report");
    std::string run_config_file;
    std::vector<std::string> run_manifests;
    std::string run_model = "fcn", run_scope, run_out, run_detector, run_split_file;
    int run_iterations = 2000, run_gan_side = 256;
    double run_fraction = 0.8, run_lr = 0;
    std::uint64_t run_seed = 0;
    bool run_use_roi = false;
    run->add_option("--config", run_config_file, "key=value file with any of these options");
    auto* opt_manifest = run->add_option("--manifest", run_manifests, "manifest file(s)");
    auto* opt_model =
        run->add_option("--model", run_model, "fcn or gan")->check(CLI::IsMember({"fcn", "gan"}));
    auto* opt_scope = run->add_option(
        "--scope", run_scope, "single:<dataset>, merged-nir, merged-vis or merged-all");
    auto* opt_iterations = run->add_option("--iterations", run_iterations, "training iterations");
    auto* opt_fraction =
        run->add_option("--fraction", run_fraction, "train fraction for the seeded split");
    auto* opt_split_file =
        run->add_option("--split-file", run_split_file, "fixed split file (overrides --fraction)");
    auto* opt_lr = run->add_option("--lr", run_lr, "learning rate (default: the model's)");
    auto* opt_gan_side = run->add_option("--gan-side", run_gan_side, "gan operating resolution");
    auto* opt_use_roi =
        run->add_flag("--use-roi", run_use_roi, "crop to the detected eye region first");
    auto* opt_detector =
        run->add_option("--detector", run_detector, "detector checkpoint for --use-roi");
    auto* opt_out = run->add_option("--out", run_out, "output directory");
    auto* opt_seed =
        run->add_option("--seed", run_seed, "controls split, initialization and shuffling");

    CLI11_PARSE(app, argc, argv);

    if (*synth) {
        pipeline::SynthOptions options;
        options.dataset_name = synth_name;
        options.spectrum =
            synth_spectrum == "vis" ? corpus::Spectrum::VIS : corpus::Spectrum::NIR;
        const auto manifest =
            pipeline::generate_synthetic_dataset(synth_n, synth_side, synth_seed, synth_out, options);
        std::cout << "wrote " << synth_n << " images; manifest at " << manifest << "\n";
    } else if (*split) {
        const auto samples = corpus::load_manifest(split_manifest);
        const auto spec = corpus::split_dataset(samples, split_seed, split_fraction);
        corpus::save_split(spec, prepared(split_out));
        std::cout << "split " << samples.size() << " samples into " << spec.train_ids.size()
                  << " train / " << spec.test_ids.size() << " test; wrote " << split_out << "\n";
    } else if (*trdet) {
        const auto samples = corpus::load_manifest(trdet_manifest);
        auto model = roi::build_detector(trdet_channels, static_cast<unsigned>(trdet_seed));
        roi::DetectorConfig config;
        config.input_channels = trdet_channels;
        config.iterations = trdet_iterations;
        config.learning_rate = trdet_lr;
        roi::DetectorTrainOptions options;
        options.checkpoint_path = prepared(trdet_out);
        options.seed = static_cast<unsigned>(trdet_seed + 1);
        const auto result = roi::train_detector(*model, samples, config, options);
        if (!trdet_trace.empty()) {
            std::vector<fcnseg::TracePoint> trace;
            for (const auto& [it, loss] : result.trace) trace.push_back({it, loss});
            fcnseg::write_trace(trace, prepared(trdet_trace));
        }
        std::cout << "trained detector for " << trdet_iterations << " iterations on "
                  << samples.size() << " samples; checkpoint at " << trdet_out << "\n";
    } else if (*train) {
        const auto samples = corpus::load_manifest(train_manifest);
        if (train_model == "fcn") {
            fcnseg::FcnConfig config;
            if (train_iterations > 0) config.iterations = train_iterations;
            if (train_lr > 0) config.learning_rate = train_lr;
            auto model = fcnseg::build_fcn(config, "", static_cast<unsigned>(train_seed + 1));
            fcnseg::FcnTrainOptions options;
            options.checkpoint_path = prepared(train_out);
            options.seed = static_cast<unsigned>(train_seed + 2);
            options.on_trace = [](const fcnseg::TracePoint& p) {
                std::cout << "iter " << p.iteration << " loss " << p.loss << "\n";
            };
            const auto trace = fcnseg::train_fcn(*model, samples, config, options);
            if (!train_trace.empty()) fcnseg::write_trace(trace, prepared(train_trace));
        } else {
            ganseg::GanConfig config;
            config.input_side = train_gan_side;
            if (train_iterations > 0) config.iterations = train_iterations;
            if (train_lr > 0) config.learning_rate = train_lr;
            config.validate();
            auto state = ganseg::build_gan(config, static_cast<unsigned>(train_seed + 1));
            pipeline::train_gan(*state, samples,
                                train_iterations > 0 ? train_iterations : config.iterations,
                                train_seed + 2);
            ganseg::save_gan(*state, prepared(train_out));
            if (!train_trace.empty()) ganseg::write_gan_trace(state->trace(), prepared(train_trace));
        }
        std::cout << "trained " << train_model << " on " << samples.size()
                  << " samples; checkpoint at " << train_out << "\n";
    } else if (*predict) {
        const Image image = load_image(pred_image);
        std::function<BinaryMask(const Image&)> segment;
        std::unique_ptr<fcnseg::FcnModel> fcn;
        std::unique_ptr<ganseg::GanState> gan;
        if (pred_model == "fcn") {
            fcn = fcnseg::build_fcn(fcnseg::FcnConfig{}, pred_checkpoint);
            segment = [&](const Image& img) { return pipeline::predict_fcn_padded(*fcn, img); };
        } else {
            gan = ganseg::load_gan(pred_checkpoint);
            segment = [&](const Image& img) { return ganseg::predict_gan(*gan, img); };
        }
        const BinaryMask mask = pred_detector.empty()
                                    ? segment(image)
                                    : predict_with_roi(pred_detector, image, segment);
        corpus::save_mask(mask, prepared(pred_out));
        std::cout << "wrote " << pred_out << "\n";
    } else if (*evaluate) {
        const auto samples = corpus::load_manifest(eval_manifest);
        std::vector<eval::EvalRecord> records;
        for (const auto& s : samples) {
            if (!s.mask_path) continue;
            const auto pred_path =
                (std::filesystem::path(eval_pred_dir) / (s.id + ".png")).string();
            records.push_back(eval::evaluate_pair(s.id, corpus::load_mask(pred_path),
                                                  corpus::load_mask(*s.mask_path)));
        }
        if (records.empty()) throw ValidationError("no samples with ground-truth masks");
        print_aggregate("aggregate", eval::aggregate(records));
        if (!eval_csv.empty()) eval::write_records_csv(records, prepared(eval_csv));
        if (!eval_report.empty()) {
            const auto agg = eval::aggregate(records);
            std::ofstream out(prepared(eval_report));
            if (!out) throw IoError("cannot write " + eval_report);
            out << "n=" << agg.n << "\nmean_e=" << agg.mean_e << "\nstd_e=" << agg.std_e
                << "\nmean_f1=" << agg.mean_f1 << "\nstd_f1=" << agg.std_f1
                << "\nundefined_f1=" << agg.undefined_f1 << "\n";
        }
    } else if (*compare) {
        const auto records_a = eval::read_records_csv(cmp_a);
        const auto records_b = eval::read_records_csv(cmp_b);
        const auto cmp = pipeline::compare_methods(records_a, records_b, cmp_alpha);
        std::cout << "n=" << cmp.n << " pairs\n";
        std::cout << "mean E  a=";
        metric(std::cout, cmp.mean_e_a) << " b=";
        metric(std::cout, cmp.mean_e_b) << "\n";
        std::cout << "mean F1 a=";
        metric(std::cout, cmp.mean_f1_a) << " b=";
        metric(std::cout, cmp.mean_f1_b) << "\n";
        print_t_test("E ", cmp.e_test);
        print_t_test("F1", cmp.f1_test);
    } else if (*overlay) {
        const Image image = load_image(ovl_image);
        const Image out =
            pipeline::render_overlay(image, corpus::load_mask(ovl_pred), corpus::load_mask(ovl_truth));
        save_image(out, prepared(ovl_out));
        std::cout << "wrote " << ovl_out << "\n";
    } else if (*run) {
        bool seed_given = opt_seed->count() > 0;
        if (!run_config_file.empty()) {
            std::ifstream in(run_config_file);
            if (!in) throw IoError("cannot read config file " + run_config_file);
            std::string line;
            int line_no = 0;
            while (std::getline(in, line)) {
                ++line_no;
                if (line.empty() || line[0] == '#') continue;
                const auto eq = line.find('=');
                if (eq == std::string::npos)
                    throw ParseError(run_config_file + " line " + std::to_string(line_no) +
                                     ": expected key=value, got '" + line + "'");
                const std::string key = line.substr(0, eq);
                const std::string value = line.substr(eq + 1);
                const auto set = [&](CLI::Option* option, auto& target) {
                    if (option->count() > 0) return;  // explicit flags win
                    std::istringstream parse(value);
                    if (!(parse >> target) || !parse.eof())
                        throw ParseError(run_config_file + " line " + std::to_string(line_no) +
                                         ": bad value for " + key);
                };
                if (key == "manifest") {
                    if (opt_manifest->count() == 0) run_manifests.push_back(value);
                } else if (key == "model") {
                    set(opt_model, run_model);
                } else if (key == "scope") {
                    set(opt_scope, run_scope);
                } else if (key == "iterations") {
                    set(opt_iterations, run_iterations);
                } else if (key == "fraction") {
                    set(opt_fraction, run_fraction);
                } else if (key == "split_file") {
                    set(opt_split_file, run_split_file);
                } else if (key == "lr") {
                    set(opt_lr, run_lr);
                } else if (key == "gan_side") {
                    set(opt_gan_side, run_gan_side);
                } else if (key == "use_roi") {
                    if (opt_use_roi->count() == 0)
                        run_use_roi = value == "1" || value == "true";
                } else if (key == "detector") {
                    set(opt_detector, run_detector);
                } else if (key == "out") {
                    set(opt_out, run_out);
                } else if (key == "seed") {
                    set(opt_seed, run_seed);
                    seed_given = true;
                } else {
                    throw ParseError(run_config_file + " line " + std::to_string(line_no) +
                                     ": unknown key '" + key + "'");
                }
            }
        }
        if (run_manifests.empty()) throw ConfigError("run needs --manifest (flag or config file)");
        if (run_scope.empty()) throw ConfigError("run needs --scope (flag or config file)");
        if (run_out.empty()) throw ConfigError("run needs --out (flag or config file)");
        if (!seed_given) throw ConfigError("run needs an explicit --seed (flag or config file)");

        pipeline::ExperimentConfig config;
        config.model = pipeline::model_from_string(run_model);
        config.scope = pipeline::scope_from_string(run_scope);
        config.train_fraction = run_fraction;
        config.split_file = run_split_file;
        config.iterations = run_iterations;
        config.learning_rate = run_lr;
        config.gan_input_side = run_gan_side;
        config.use_roi_stage = run_use_roi;
        config.detector_checkpoint = run_detector;
        config.output_dir = run_out;
        config.seed = run_seed;

        const auto samples = pipeline::load_manifests(run_manifests);
        std::cout << "running " << run_model << " experiment, scope " << run_scope << ", "
                  << run_iterations << " iterations, seed " << run_seed << "\n";
        const auto result = pipeline::run_experiment(samples, config);

        print_aggregate("pooled", result.pooled);
        if (result.per_dataset.size() > 1)
            for (const auto& [name, agg] : result.per_dataset) print_aggregate("  " + name, agg);
        std::cout << "best " << result.best_id << ", worst " << result.worst_id << "\n"
                  << "per-image CSV: " << result.csv_path << "\n"
                  << "report:        " << result.report_path << "\n"
                  << "overlays:      " << result.best_overlay_path << ", "
                  << result.worst_overlay_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
