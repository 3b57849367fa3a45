#include "iris/pipeline/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <utility>

#include "iris/corpus/mask_io.hpp"
#include "iris/corpus/split.hpp"
#include "iris/error.hpp"
#include "iris/ganseg/gan.hpp"
#include "iris/nn/convert.hpp"
#include "iris/pipeline/overlay.hpp"
#include "iris/roi/detector.hpp"
#include "iris/roi/geometry.hpp"
#include "iris/rng.hpp"

namespace iris::pipeline {

namespace {

namespace fs = std::filesystem;

// Rethrows stage errors with the stage name (and sample, when known)
// prefixed, preserving the error type.
template <typename Fn>
auto in_stage(const std::string& stage, const std::string& sample, Fn&& fn) {
    const auto context = [&] {
        std::string c = "stage '" + stage + "'";
        if (!sample.empty()) c += " sample '" + sample + "'";
        return c + ": ";
    };
    try {
        return fn();
    } catch (const IoError& e) {
        throw IoError(context() + e.what());
    } catch (const ParseError& e) {
        throw ParseError(context() + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(context() + e.what());
    } catch (const TrainingDivergedError& e) {
        throw TrainingDivergedError(context() + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(context() + e.what());
    }
}

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : ", ") + p;
    return out;
}

std::vector<corpus::ImageSample> scoped_samples(const std::vector<corpus::ImageSample>& samples,
                                                const ExperimentScope& scope) {
    std::vector<corpus::ImageSample> scoped;
    for (const auto& s : samples) {
        switch (scope.kind) {
            case ScopeKind::SingleDataset:
                if (s.dataset == scope.dataset) scoped.push_back(s);
                break;
            case ScopeKind::MergedNir:
                if (s.spectrum == corpus::Spectrum::NIR) scoped.push_back(s);
                break;
            case ScopeKind::MergedVis:
                if (s.spectrum == corpus::Spectrum::VIS) scoped.push_back(s);
                break;
            case ScopeKind::MergedAll:
                scoped.push_back(s);
                break;
        }
    }
    if (scoped.empty()) {
        if (scope.kind == ScopeKind::SingleDataset) {
            std::vector<std::string> names;
            for (const auto& s : samples)
                if (std::find(names.begin(), names.end(), s.dataset) == names.end())
                    names.push_back(s.dataset);
            std::sort(names.begin(), names.end());
            throw ConfigError("unknown dataset '" + scope.dataset + "'; the manifest has [" +
                              join(names) + "]");
        }
        throw ConfigError("scope " + to_string(scope) + " selects no samples");
    }
    return scoped;
}

// Per-dataset 80/20 (or fixed-file) partition of the scoped samples.
void split_samples(const std::vector<corpus::ImageSample>& scoped,
                   const ExperimentConfig& config, std::vector<corpus::ImageSample>& train,
                   std::vector<corpus::ImageSample>& test) {
    std::map<std::string, const corpus::ImageSample*> by_id;
    for (const auto& s : scoped) by_id[s.id] = &s;

    if (!config.split_file.empty()) {
        const auto spec = corpus::load_split(config.split_file);
        std::vector<std::string> unknown;
        const auto take = [&](const std::vector<std::string>& ids,
                              std::vector<corpus::ImageSample>& out) {
            for (const auto& id : ids) {
                const auto it = by_id.find(id);
                if (it == by_id.end())
                    unknown.push_back(id);
                else
                    out.push_back(*it->second);
            }
        };
        take(spec.train_ids, train);
        take(spec.test_ids, test);
        if (!unknown.empty())
            throw ValidationError("split file lists ids outside the scope: [" + join(unknown) +
                                  "]");
        if (train.empty() || test.empty())
            throw ValidationError("the fixed split leaves an empty train or test set");
        return;
    }

    std::map<std::string, std::vector<corpus::ImageSample>> by_dataset;
    for (const auto& s : scoped) by_dataset[s.dataset].push_back(s);
    for (const auto& [name, group] : by_dataset) {
        const auto spec = corpus::split_dataset(group, config.seed, config.train_fraction);
        for (const auto& id : spec.train_ids) train.push_back(*by_id.at(id));
        for (const auto& id : spec.test_ids) test.push_back(*by_id.at(id));
    }
}

Image pad_image_to_multiple(const Image& img, int multiple) {
    const int pw = (img.width + multiple - 1) / multiple * multiple;
    const int ph = (img.height + multiple - 1) / multiple * multiple;
    if (pw == img.width && ph == img.height) return img;
    Image out(pw, ph, img.channels);
    for (int y = 0; y < ph; ++y)
        for (int x = 0; x < pw; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(y, x, c) = img.at(std::min(y, img.height - 1),
                                         std::min(x, img.width - 1), c);
    return out;
}

BinaryMask pad_mask_to_multiple(const BinaryMask& mask, int multiple) {
    const int pw = (mask.width + multiple - 1) / multiple * multiple;
    const int ph = (mask.height + multiple - 1) / multiple * multiple;
    if (pw == mask.width && ph == mask.height) return mask;
    BinaryMask out(pw, ph);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) out.at(y, x) = mask.at(y, x);
    return out;
}

// The crop window each test image is segmented in, with the transform that
// pastes the cropped prediction back at full resolution.
struct RoiPlan {
    roi::RoiBox box;
    roi::CropTransform transform;
};

RoiPlan plan_roi(roi::Detector& detector, const roi::AnchorSet& anchors, const Image& image) {
    const auto detections = roi::predict_detections(detector, anchors, image);
    const auto selected = roi::select_detection(detections, image.width, image.height);
    RoiPlan plan;
    plan.box = selected ? roi::pad_and_square(*selected, image.width, image.height)
                        : roi::full_image_roi(image.width, image.height);
    plan.transform = roi::crop_transform(plan.box, image.width, image.height);
    return plan;
}

std::string format_double(double v, int precision = 6) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(precision) << v;
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << content;
}

}  // namespace

std::string to_string(ModelKind m) { return m == ModelKind::FCN ? "fcn" : "gan"; }

ModelKind model_from_string(const std::string& s) {
    if (s == "fcn") return ModelKind::FCN;
    if (s == "gan") return ModelKind::GAN;
    throw ConfigError("unknown model '" + s + "' (expected fcn or gan)");
}

std::string to_string(const ExperimentScope& s) {
    switch (s.kind) {
        case ScopeKind::SingleDataset: return "single:" + s.dataset;
        case ScopeKind::MergedNir: return "merged-nir";
        case ScopeKind::MergedVis: return "merged-vis";
        case ScopeKind::MergedAll: return "merged-all";
    }
    return "";
}

ExperimentScope scope_from_string(const std::string& s) {
    if (s.rfind("single:", 0) == 0) {
        const std::string name = s.substr(7);
        if (name.empty()) throw ConfigError("scope 'single:' needs a dataset name");
        return {ScopeKind::SingleDataset, name};
    }
    if (s == "merged-nir") return {ScopeKind::MergedNir, ""};
    if (s == "merged-vis") return {ScopeKind::MergedVis, ""};
    if (s == "merged-all") return {ScopeKind::MergedAll, ""};
    throw ConfigError("unknown scope '" + s +
                      "' (expected single:<dataset>, merged-nir, merged-vis or merged-all)");
}

std::vector<corpus::ImageSample> load_manifests(const std::vector<std::string>& paths) {
    std::vector<corpus::ImageSample> all;
    for (const auto& path : paths) {
        auto samples = corpus::load_manifest(path);
        all.insert(all.end(), std::make_move_iterator(samples.begin()),
                   std::make_move_iterator(samples.end()));
    }
    std::map<std::string, int> counts;
    std::vector<std::string> duplicated;
    for (const auto& s : all)
        if (++counts[s.id] == 2) duplicated.push_back(s.id);
    if (!duplicated.empty())
        throw ValidationError("duplicate sample ids across manifests: [" + join(duplicated) +
                              "]");
    return all;
}

void train_gan(ganseg::GanState& state, const std::vector<corpus::ImageSample>& samples,
               int iterations, std::uint64_t order_seed) {
    if (samples.empty()) throw ValidationError("gan training needs at least one sample");
    {
        std::vector<std::string> missing;
        for (const auto& s : samples)
            if (!s.mask_path) missing.push_back(s.id);
        if (!missing.empty())
            throw ValidationError("samples lack ground-truth masks: [" + join(missing) + "]");
    }
    const int side = state.config().input_side;
    std::vector<ganseg::GanPair> pairs;
    for (const auto& s : samples) {
        in_stage("prepare", s.id, [&] {
            const Image image = ganseg::resize_image_for_gan(load_image(s.image_path), side);
            const BinaryMask mask =
                ganseg::resize_mask_for_gan(corpus::load_mask(*s.mask_path), side);
            pairs.push_back({nn::image_to_input(image), nn::mask_to_unit(mask)});
        });
    }
    Rng order_rng(order_seed);
    std::vector<int> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::size_t cursor = order.size();
    for (int i = 0; i < iterations; ++i) {
        if (cursor == order.size()) {
            order_rng.shuffle(order.begin(), order.end());
            cursor = 0;
        }
        ganseg::gan_step(state, {pairs[static_cast<std::size_t>(order[cursor++])]});
    }
}

BinaryMask predict_fcn_padded(fcnseg::FcnModel& model, const Image& image) {
    if (image.width % 32 == 0 && image.height % 32 == 0)
        return fcnseg::predict_fcn(model, image);
    const Image padded = pad_image_to_multiple(image, 32);
    const BinaryMask full = fcnseg::predict_fcn(model, padded);
    BinaryMask out(image.width, image.height);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) out.at(y, x) = full.at(y, x);
    return out;
}

RunResult run_experiment(const std::string& manifest_path, const ExperimentConfig& config) {
    return run_experiment(corpus::load_manifest(manifest_path), config);
}

RunResult run_experiment(const std::vector<corpus::ImageSample>& samples,
                         const ExperimentConfig& config) {
    if (config.output_dir.empty()) throw ConfigError("the experiment needs an output directory");
    if (config.iterations < 1)
        throw ConfigError("iterations must be positive, got " + std::to_string(config.iterations));
    if (config.split_file.empty() &&
        (config.train_fraction <= 0 || config.train_fraction >= 1))
        throw ConfigError("train fraction must be in (0, 1), got " +
                          format_double(config.train_fraction, 3));
    if (config.use_roi_stage && config.detector_checkpoint.empty())
        throw ConfigError("the roi stage needs a detector checkpoint");

    const auto scoped = scoped_samples(samples, config.scope);
    {
        std::vector<std::string> missing;
        for (const auto& s : scoped)
            if (!s.mask_path) missing.push_back(s.id);
        if (!missing.empty())
            throw ValidationError("samples without ground-truth masks: [" + join(missing) + "]");
    }

    std::vector<corpus::ImageSample> train, test;
    split_samples(scoped, config, train, test);
    std::sort(test.begin(), test.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });

    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    if (ec) throw IoError("cannot create " + config.output_dir + ": " + ec.message());
    const auto out_path = [&](const std::string& name) {
        return (fs::path(config.output_dir) / name).string();
    };

    // Optional detection stage: train on written-out crops, remember each
    // test image's crop window for paste-back scoring.
    std::unique_ptr<roi::LoadedDetector> detector;
    std::map<std::string, RoiPlan> test_plans;
    if (config.use_roi_stage) {
        detector = std::make_unique<roi::LoadedDetector>(in_stage(
            "load-detector", "", [&] { return roi::load_detector(config.detector_checkpoint); }));
        fs::create_directories(out_path("crops"), ec);
        if (ec) throw IoError("cannot create " + out_path("crops") + ": " + ec.message());

        for (auto& s : train) {
            in_stage("roi", s.id, [&] {
                const Image image = load_image(s.image_path);
                const BinaryMask truth = corpus::load_mask(*s.mask_path);
                const auto plan = plan_roi(*detector->model, detector->anchors, image);
                Image crop = roi::crop_image(image, plan.box);
                BinaryMask crop_mask = roi::crop_mask(truth, plan.box);
                if (config.model == ModelKind::FCN) {
                    crop = pad_image_to_multiple(crop, 32);
                    crop_mask = pad_mask_to_multiple(crop_mask, 32);
                }
                const std::string image_path = out_path("crops/" + s.id + ".png");
                const std::string mask_path = out_path("crops/" + s.id + "_mask.png");
                save_image(crop, image_path);
                corpus::save_mask(crop_mask, mask_path);
                s.image_path = image_path;
                s.mask_path = mask_path;
                s.width = crop.width;
                s.height = crop.height;
            });
        }
        for (const auto& s : test) {
            in_stage("roi", s.id, [&] {
                const Image image = load_image(s.image_path);
                test_plans[s.id] = plan_roi(*detector->model, detector->anchors, image);
            });
        }
    }

    // Training. Seeds are derived from the run seed so that splitting,
    // initialization and the shuffle order are all pinned by it.
    const unsigned init_seed = static_cast<unsigned>(config.seed + 1);
    const std::uint64_t order_seed = config.seed + 2;
    double resolved_lr = config.learning_rate;
    std::unique_ptr<fcnseg::FcnModel> fcn;
    std::unique_ptr<ganseg::GanState> gan;

    if (config.model == ModelKind::FCN) {
        fcnseg::FcnConfig fc;
        fc.iterations = config.iterations;
        if (config.learning_rate > 0) fc.learning_rate = config.learning_rate;
        resolved_lr = fc.learning_rate;
        fcn = fcnseg::build_fcn(fc, "", init_seed);
        fcnseg::FcnTrainOptions options;
        options.checkpoint_path = out_path("model.ck");
        options.trace_every = std::max(1, config.iterations / 100);
        options.seed = static_cast<unsigned>(order_seed);
        const auto trace = in_stage("train", "", [&] { return train_fcn(*fcn, train, fc, options); });
        fcnseg::write_trace(trace, out_path("trace.txt"));
    } else {
        ganseg::GanConfig gc;
        gc.input_side = config.gan_input_side;
        gc.iterations = config.iterations;
        if (config.learning_rate > 0) gc.learning_rate = config.learning_rate;
        resolved_lr = gc.learning_rate;
        gc.validate();
        gan = ganseg::build_gan(gc, init_seed);
        in_stage("train", "", [&] {
            train_gan(*gan, train, config.iterations, order_seed);
            return 0;
        });
        ganseg::save_gan(*gan, out_path("model.ck"));
        ganseg::write_gan_trace(gan->trace(), out_path("trace.txt"));
    }

    // Scoring at full resolution.
    RunResult result;
    std::map<std::string, BinaryMask> predictions;
    std::map<std::string, std::vector<std::size_t>> dataset_rows;
    for (const auto& s : test) {
        in_stage("evaluate", s.id, [&] {
            const Image image = load_image(s.image_path);
            const BinaryMask truth = corpus::load_mask(*s.mask_path);
            BinaryMask pred;
            if (config.use_roi_stage) {
                const auto& plan = test_plans.at(s.id);
                const Image crop = roi::crop_image(image, plan.box);
                const BinaryMask crop_pred = config.model == ModelKind::FCN
                                                 ? predict_fcn_padded(*fcn, crop)
                                                 : predict_gan(*gan, crop);
                pred = roi::paste_mask(crop_pred, plan.transform);
            } else {
                pred = config.model == ModelKind::FCN ? predict_fcn_padded(*fcn, image)
                                                      : predict_gan(*gan, image);
            }
            dataset_rows[s.dataset].push_back(result.records.size());
            result.records.push_back(eval::evaluate_pair(s.id, pred, truth));
            predictions.emplace(s.id, std::move(pred));
        });
    }

    result.pooled = eval::aggregate(result.records);
    for (const auto& [name, rows] : dataset_rows) {
        std::vector<eval::EvalRecord> subset;
        for (const auto row : rows) subset.push_back(result.records[row]);
        result.per_dataset.push_back({name, eval::aggregate(subset)});
    }

    std::size_t best = 0, worst = 0;
    for (std::size_t i = 1; i < result.records.size(); ++i) {
        if (result.records[i].e < result.records[best].e) best = i;
        if (result.records[i].e > result.records[worst].e) worst = i;
    }
    result.best_id = result.records[best].sample_id;
    result.worst_id = result.records[worst].sample_id;

    const auto write_overlay = [&](const std::string& id, const std::string& prefix) {
        const auto sample = std::find_if(test.begin(), test.end(),
                                         [&](const auto& s) { return s.id == id; });
        const Image image = load_image(sample->image_path);
        const BinaryMask truth = corpus::load_mask(*sample->mask_path);
        const std::string path = out_path(prefix + "_" + id + ".png");
        save_image(render_overlay(image, predictions.at(id), truth), path);
        return path;
    };
    result.best_overlay_path = write_overlay(result.best_id, "overlay_best");
    result.worst_overlay_path = write_overlay(result.worst_id, "overlay_worst");

    result.csv_path = out_path("per_image.csv");
    eval::write_records_csv(result.records, result.csv_path);
    result.checkpoint_path = out_path("model.ck");
    result.trace_path = out_path("trace.txt");

    // Machine-readable echo of everything that determined this run.
    {
        std::ostringstream cfg;
        cfg << "model=" << to_string(config.model) << "\n"
            << "scope=" << to_string(config.scope) << "\n"
            << "iterations=" << config.iterations << "\n"
            << "learning_rate=" << resolved_lr << "\n"
            << "seed=" << config.seed << "\n"
            << "use_roi_stage=" << (config.use_roi_stage ? 1 : 0) << "\n";
        if (config.use_roi_stage) cfg << "detector_checkpoint=" << config.detector_checkpoint << "\n";
        if (config.model == ModelKind::GAN) cfg << "gan_input_side=" << config.gan_input_side << "\n";
        if (config.split_file.empty())
            cfg << "train_fraction=" << format_double(config.train_fraction, 3) << "\n";
        else
            cfg << "split_file=" << config.split_file << "\n";
        cfg << "train_size=" << train.size() << "\n"
            << "test_size=" << test.size() << "\n";
        result.run_config_path = out_path("run_config.txt");
        write_text_file(result.run_config_path, cfg.str());
    }

    {
        std::ostringstream report;
        report << "segmentation experiment report\n"
               << "===============================\n"
               << "model: " << to_string(config.model) << "\n"
               << "scope: " << to_string(config.scope) << "\n"
               << "train/test: " << train.size() << "/" << test.size() << " (seed "
               << config.seed << ")\n"
               << "iterations: " << config.iterations << "\n"
               << "learning rate: " << resolved_lr << "\n"
               << "roi stage: " << (config.use_roi_stage ? "on" : "off") << "\n\n";
        report << "pooled results (n=" << result.pooled.n << ")\n"
               << "  E  mean " << format_double(result.pooled.mean_e) << " std "
               << format_double(result.pooled.std_e) << "\n"
               << "  F1 mean " << format_double(result.pooled.mean_f1) << " std "
               << format_double(result.pooled.std_f1) << " (" << result.pooled.undefined_f1
               << " undefined, scored as 0)\n\n";
        report << "per-dataset results\n";
        for (const auto& [name, agg] : result.per_dataset)
            report << "  " << name << ": n=" << agg.n << " E " << format_double(agg.mean_e)
                   << " std " << format_double(agg.std_e) << " F1 " << format_double(agg.mean_f1)
                   << " std " << format_double(agg.std_f1) << "\n";
        report << "\nbest  " << result.best_id << " E "
               << format_double(result.records[best].e) << " -> " << result.best_overlay_path
               << "\nworst " << result.worst_id << " E "
               << format_double(result.records[worst].e) << " -> " << result.worst_overlay_path
               << "\n";
        result.report_path = out_path("report.txt");
        write_text_file(result.report_path, report.str());
    }

    return result;
}

}  // namespace iris::pipeline
