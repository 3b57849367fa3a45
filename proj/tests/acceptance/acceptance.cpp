// Acceptance gate: one self-contained check per release criterion, each
// printing a single PASS/FAIL line with the measured numbers. The process
// exit code is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "iris/corpus/manifest.hpp"
#include "iris/corpus/mask_io.hpp"
#include "iris/error.hpp"
#include "iris/eval/metrics.hpp"
#include "iris/eval/ttest.hpp"
#include "iris/fcnseg/fcn.hpp"
#include "iris/ganseg/gan.hpp"
#include "iris/image.hpp"
#include "iris/nn/convert.hpp"
#include "iris/nn/layers.hpp"
#include "iris/nn/losses.hpp"
#include "iris/pipeline/experiment.hpp"
#include "iris/pipeline/synth.hpp"
#include "iris/roi/detector.hpp"
#include "iris/roi/geometry.hpp"
#include "iris/rng.hpp"

using namespace iris;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::duration<double>>(Clock::now() - t0).count();
}

fs::path work_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "iris_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string num(double v) {
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

corpus::ImageSample write_disc_sample(const fs::path& dir, const std::string& id, int side,
                                      double cx, double cy, double r) {
    Image img(side, side, 1, 40);
    BinaryMask mask(side, side);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
            if (std::hypot(x - cx, y - cy) <= r) {
                img.at(y, x) = 220;
                mask.at(y, x) = 1;
            }
    corpus::ImageSample s;
    s.id = id;
    s.image_path = (dir / (id + ".png")).string();
    s.mask_path = (dir / (id + "_mask.png")).string();
    s.dataset = "synthetic";
    s.subject = id;
    s.spectrum = corpus::Spectrum::NIR;
    s.width = side;
    s.height = side;
    save_image(img, s.image_path);
    corpus::save_mask(mask, *s.mask_path);
    return s;
}

// ---------------------------------------------------------------------------
// 1. Segmentation metrics against brute-force tallies.

bool pixel_metric_oracle(std::string& detail) {
    const auto t0 = Clock::now();
    Rng rng(101);
    for (int trial = 0; trial < 1000; ++trial) {
        const int w = rng.uniform_int(1, 64);
        const int h = rng.uniform_int(1, 64);
        const double dp = rng.uniform();
        const double dt = rng.uniform();
        BinaryMask pred(w, h), truth(w, h);
        for (auto& v : pred.labels) v = rng.bernoulli(dp) ? 1 : 0;
        for (auto& v : truth.labels) v = rng.bernoulli(dt) ? 1 : 0;

        long long differing = 0, tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < pred.labels.size(); ++i) {
            const bool p = pred.labels[i] != 0;
            const bool t = truth.labels[i] != 0;
            differing += p != t;
            tp += p && t;
            fp += p && !t;
            fn += !p && t;
        }

        const double want_e = static_cast<double>(differing) / (static_cast<double>(w) * h);
        if (eval::segmentation_error(pred, truth) != want_e) {
            detail = "segmentation error mismatch at trial " + std::to_string(trial);
            return false;
        }

        std::optional<double> want_f1;
        if (tp + fp > 0 && tp + fn > 0) {
            const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
            const double r = static_cast<double>(tp) / static_cast<double>(tp + fn);
            if (p + r > 0.0) want_f1 = 2.0 * p * r / (p + r);
        }
        if (eval::evaluate_pair("t", pred, truth).f1 != want_f1) {
            detail = "f1 mismatch at trial " + std::to_string(trial);
            return false;
        }
    }
    const double elapsed = seconds_since(t0);
    detail = "1000 mask pairs exact in " + num(elapsed) + " s";
    return elapsed < 10.0;
}

// ---------------------------------------------------------------------------
// 2. Error metric boundary cases.

bool error_boundary_cases(std::string& detail) {
    Rng rng(111);
    for (int trial = 0; trial < 50; ++trial) {
        const int w = rng.uniform_int(1, 80);
        const int h = rng.uniform_int(1, 80);
        BinaryMask mask(w, h);
        for (auto& v : mask.labels) v = rng.bernoulli(0.5) ? 1 : 0;
        BinaryMask complement(w, h);
        for (std::size_t i = 0; i < mask.labels.size(); ++i)
            complement.labels[i] = mask.labels[i] ? 0 : 1;

        if (eval::segmentation_error(mask, mask) != 0.0) {
            detail = "identical masks gave nonzero error";
            return false;
        }
        if (eval::segmentation_error(complement, mask) != 1.0) {
            detail = "complementary masks gave error != 1";
            return false;
        }
    }
    detail = "identical -> 0 and complementary -> 1, exact, 50 trials";
    return true;
}

// ---------------------------------------------------------------------------
// 3. Paired t-test against a quadrature reference.

double t_density_tail(double t_abs, int df) {
    // P(T > t_abs) for Student's t via Simpson quadrature of the density
    // over [0, t_abs], using the symmetry of the distribution.
    const double nu = df;
    const double log_norm =
        std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0) - 0.5 * std::log(nu * M_PI);
    const auto density = [&](double x) {
        return std::exp(log_norm - (nu + 1.0) / 2.0 * std::log1p(x * x / nu));
    };
    const int intervals = 40000;
    const double step = t_abs / intervals;
    double sum = density(0.0) + density(t_abs);
    for (int i = 1; i < intervals; ++i)
        sum += density(i * step) * (i % 2 ? 4.0 : 2.0);
    const double integral = sum * step / 3.0;
    return 0.5 - integral;
}

bool paired_t_test_oracle(std::string& detail) {
    Rng rng(202);
    double max_dt = 0.0, max_dp = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = rng.uniform_int(5, 50);
        std::vector<double> a(n), b(n);
        for (int i = 0; i < n; ++i) {
            a[i] = rng.normal(0.5, 0.2);
            b[i] = a[i] - rng.normal(0.02, 0.1);
        }

        const auto res = eval::paired_t_test(a, b);

        double mean = 0.0;
        for (int i = 0; i < n; ++i) mean += a[i] - b[i];
        mean /= n;
        double var = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = a[i] - b[i] - mean;
            var += d * d;
        }
        var /= n - 1;
        const double t_ref = mean / std::sqrt(var / n);
        const double p_ref = 2.0 * t_density_tail(std::fabs(t_ref), n - 1);

        max_dt = std::max(max_dt, std::fabs(res.t_statistic - t_ref));
        max_dp = std::max(max_dp, std::fabs(res.p_value - p_ref));
    }
    detail = "50 samples, max |dt| " + num(max_dt) + ", max |dp| " + num(max_dp);
    return max_dt < 1e-9 && max_dp < 1e-6;
}

// ---------------------------------------------------------------------------
// 4. Crop geometry properties and the worked example.

bool roi_geometry_properties(std::string& detail) {
    const auto example = roi::pad_and_square({100, 100, 200, 180, 1.0}, 640, 480, 0.10);
    if (example.side != 128 || example.width() != 128 || example.height() != 128) {
        detail = "worked example gave side " + std::to_string(example.side);
        return false;
    }

    Rng rng(303);
    for (int trial = 0; trial < 10000; ++trial) {
        const int w = rng.uniform_int(16, 2048);
        const int h = rng.uniform_int(16, 2048);
        roi::Detection box;
        box.x_min = rng.uniform(0.0, w - 2.0);
        box.y_min = rng.uniform(0.0, h - 2.0);
        box.x_max = rng.uniform(box.x_min + 0.5, static_cast<double>(w));
        box.y_max = rng.uniform(box.y_min + 0.5, static_cast<double>(h));
        const double pad = rng.uniform(0.0, 0.4);

        const auto crop = roi::pad_and_square(box, w, h, pad);
        const auto fail = [&](const char* what) {
            detail = std::string(what) + " violated at trial " + std::to_string(trial);
            return false;
        };

        if (crop.x_min < 0 || crop.y_min < 0 || crop.x_max > w || crop.y_max > h ||
            crop.x_min >= crop.x_max || crop.y_min >= crop.y_max)
            return fail("image bounds");
        if (crop.side < 1 || (crop.side & (crop.side - 1)) != 0) return fail("power of two");
        if (!crop.square_waived_x && crop.width() != crop.side) return fail("square width");
        if (!crop.square_waived_y && crop.height() != crop.side) return fail("square height");
        if (crop.square_waived_x && (crop.x_min != 0 || crop.x_max != w)) return fail("x waiver");
        if (crop.square_waived_y && (crop.y_min != 0 || crop.y_max != h)) return fail("y waiver");

        const double pxl = box.x_min - pad * box.width();
        const double pxr = box.x_max + pad * box.width();
        const double pyt = box.y_min - pad * box.height();
        const double pyb = box.y_max + pad * box.height();
        if (crop.x_min > std::max(0, static_cast<int>(std::floor(pxl))) ||
            crop.x_max < std::min(w, static_cast<int>(std::ceil(pxr))) ||
            crop.y_min > std::max(0, static_cast<int>(std::floor(pyt))) ||
            crop.y_max < std::min(h, static_cast<int>(std::ceil(pyb))))
            return fail("padded-box containment");

        const auto wider = roi::pad_and_square(box, w, h, pad + rng.uniform(0.0, 0.3));
        if (wider.side < crop.side) return fail("pad monotonicity");
    }
    detail = "10000 boxes: bounds, power-of-two, containment, monotonicity; example side 128";
    return true;
}

// ---------------------------------------------------------------------------
// 5. Detector output grid and stage table.

bool detector_layer_table(std::string& detail) {
    auto model = roi::build_detector(1, 1);
    nn::Tensor<float> input(1, 1, 416, 416);
    const auto head = model->forward(input, false);
    if (head.n != 1 || head.c != 30 || head.h != 13 || head.w != 13) {
        detail = "head shape " + head.shape_string();
        return false;
    }

    const std::vector<std::tuple<std::string, int, int>> expected{
        {"conv1", 16, 416}, {"pool1", 16, 208},  {"conv2", 32, 208},  {"pool2", 32, 104},
        {"conv3", 64, 104}, {"pool3", 64, 52},   {"conv4", 128, 52},  {"pool4", 128, 26},
        {"conv5", 256, 26}, {"pool5", 256, 13},  {"conv6", 512, 13},  {"pool6", 512, 13},
        {"conv7", 1024, 13}, {"conv8", 1024, 13}, {"conv9", 30, 13}};
    const auto rows = roi::Detector::layer_shapes(416);
    if (rows.size() != expected.size()) {
        detail = "stage table has " + std::to_string(rows.size()) + " rows";
        return false;
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& [name, channels, side] = expected[i];
        if (rows[i].name != name || rows[i].channels != channels || rows[i].height != side ||
            rows[i].width != side) {
            detail = "row " + std::to_string(i) + " is " + rows[i].name + " " +
                     std::to_string(rows[i].channels) + "@" + std::to_string(rows[i].height) +
                     ", expected " + name + " " + std::to_string(channels) + "@" +
                     std::to_string(side);
            return false;
        }
    }
    detail = "head 13x13x30, all 15 stage rows match";
    return true;
}

// ---------------------------------------------------------------------------
// 6. Gradients of the segmentation loss through a scaled-down network.

// Miniature of the segmentation net in double precision: two conv+pool
// encoder stages, a 1x1 head, one skip projection, and two x2 upsamplers
// back to input resolution.
struct ToyNet {
    nn::Conv2d<double> conv1{3, 4, 3, 1, 1};
    nn::ReLU<double> relu1;
    nn::MaxPool2d<double> pool1{2, 2};
    nn::Conv2d<double> conv2{4, 6, 3, 1, 1};
    nn::ReLU<double> relu2;
    nn::MaxPool2d<double> pool2{2, 2};
    nn::Conv2d<double> head{6, 2, 1, 1, 0};
    nn::ConvTranspose2d<double> up1{2, 2, 4, 2, 1};
    nn::Conv2d<double> skip{4, 2, 1, 1, 0};
    nn::ConvTranspose2d<double> up2{2, 2, 4, 2, 1};

    nn::Tensor<double> p1_;

    explicit ToyNet(Rng& rng) {
        conv1.init_normal(rng, 0.3);
        conv2.init_normal(rng, 0.3);
        head.init_normal(rng, 0.3);
        up1.init_normal(rng, 0.3);
        skip.init_normal(rng, 0.3);
        up2.init_normal(rng, 0.3);
    }

    nn::Tensor<double> forward(const nn::Tensor<double>& x) {
        p1_ = pool1.forward(relu1.forward(conv1.forward(x, true), true), true);
        const auto p2 = pool2.forward(relu2.forward(conv2.forward(p1_, true), true), true);
        auto fused = up1.forward(head.forward(p2, true), true);
        const auto projected = skip.forward(p1_, true);
        for (std::size_t i = 0; i < fused.data.size(); ++i) fused.data[i] += projected.data[i];
        return up2.forward(fused, true);
    }

    nn::Tensor<double> backward(const nn::Tensor<double>& dlogits) {
        const auto dfused = up2.backward(dlogits);
        const auto dp1_skip = skip.backward(dfused);
        const auto dp2 = head.backward(up1.backward(dfused));
        auto dp1 = conv2.backward(relu2.backward(pool2.backward(dp2)));
        for (std::size_t i = 0; i < dp1.data.size(); ++i) dp1.data[i] += dp1_skip.data[i];
        return conv1.backward(relu1.backward(pool1.backward(dp1)));
    }

    std::vector<nn::ParamRef<double>> params() {
        std::vector<nn::ParamRef<double>> out;
        conv1.collect_params("conv1", out);
        conv2.collect_params("conv2", out);
        head.collect_params("head", out);
        up1.collect_params("up1", out);
        skip.collect_params("skip", out);
        up2.collect_params("up2", out);
        return out;
    }
};

bool fcn_gradient_check(std::string& detail) {
    Rng rng(404);
    ToyNet net(rng);

    nn::Tensor<double> input(1, 3, 8, 8);
    for (auto& v : input.data) v = rng.normal(0.0, 1.0);
    nn::Tensor<std::uint8_t> labels(1, 1, 8, 8);
    for (auto& v : labels.data) v = rng.bernoulli(0.5) ? 1 : 0;

    const auto loss_at = [&]() {
        return nn::softmax_cross_entropy(net.forward(input), labels).loss;
    };

    auto params = net.params();
    for (auto& p : params) std::fill(p.grad->begin(), p.grad->end(), 0.0);
    const auto first = nn::softmax_cross_entropy(net.forward(input), labels);
    const auto dinput = net.backward(first.grad);

    const double h = 1e-5;
    double max_rel = 0.0;
    const auto check = [&](double analytic, double* slot) {
        const double base = *slot;
        *slot = base + h;
        const double up = loss_at();
        *slot = base - h;
        const double down = loss_at();
        *slot = base;
        const double fd = (up - down) / (2.0 * h);
        const double denom = std::max({std::fabs(analytic), std::fabs(fd), 1e-7});
        max_rel = std::max(max_rel, std::fabs(analytic - fd) / denom);
    };

    int coords = 0;
    for (auto& p : params)
        for (std::size_t i = 0; i < p.value->size(); ++i, ++coords)
            check((*p.grad)[i], &(*p.value)[i]);
    for (std::size_t i = 0; i < input.data.size(); ++i, ++coords)
        check(dinput.data[i], &input.data[i]);

    detail = std::to_string(coords) + " coordinates, max relative error " + num(max_rel);
    return max_rel < 1e-3;
}

// ---------------------------------------------------------------------------
// 7. Segmentation network overfit on eight discs.

bool fcn_disc_overfit(std::string& detail) {
    const auto dir = work_dir("fcn_overfit");
    Rng rng(17);
    std::vector<corpus::ImageSample> samples;
    for (int i = 0; i < 8; ++i) {
        const double cx = rng.uniform(40.0, 88.0);
        const double cy = rng.uniform(40.0, 88.0);
        const double r = rng.uniform(20.0, 45.0);
        samples.push_back(write_disc_sample(dir, "d" + std::to_string(i), 128, cx, cy, r));
    }

    fcnseg::FcnConfig config;
    config.iterations = 600;
    config.learning_rate = 1e-4;
    fcnseg::FcnTrainOptions options;
    options.trace_every = 50;
    options.seed = 1;
    options.checkpoint_path = (dir / "model.ck").string();

    {
        std::ofstream run_config(dir / "run_config.txt");
        run_config << "model=fcn\niterations=" << config.iterations
                   << "\nlearning_rate=" << config.learning_rate << "\nbatch_size=1\ninit_seed=5"
                   << "\norder_seed=" << options.seed << "\n";
    }

    auto model = fcnseg::build_fcn(fcnseg::FcnConfig{}, "", 5);
    const auto t0 = Clock::now();
    fcnseg::train_fcn(*model, samples, config, options);
    const double train_seconds = seconds_since(t0);

    double total_e = 0.0, min_iou = 1.0;
    for (const auto& sample : samples) {
        const auto pred = fcnseg::predict_fcn(*model, load_image(sample.image_path));
        const auto truth = corpus::load_mask(*sample.mask_path);
        const auto counts = eval::confusion_counts(pred, truth);
        total_e += eval::segmentation_error(pred, truth);
        min_iou = std::min(min_iou, static_cast<double>(counts.tp) /
                                        static_cast<double>(counts.tp + counts.fp + counts.fn));
    }
    const double mean_e = total_e / static_cast<double>(samples.size());

    detail = "600 iterations, lr 1e-4 (recorded in run config), mean train E " + num(mean_e) +
             ", min mask IoU " + num(min_iou) + ", " + num(train_seconds) + " s";
    return mean_e < 0.02 && min_iou > 0.9 && train_seconds < 900.0;
}

// ---------------------------------------------------------------------------
// 8. Adversarial model overfit on eight pairs.

bool gan_disc_overfit(std::string& detail) {
    const auto dir = work_dir("gan_overfit");
    Rng rng(23);
    std::vector<corpus::ImageSample> samples;
    for (int i = 0; i < 8; ++i) {
        const double cx = rng.uniform(20.0, 44.0);
        const double cy = rng.uniform(20.0, 44.0);
        const double r = rng.uniform(10.0, 22.0);
        samples.push_back(write_disc_sample(dir, "g" + std::to_string(i), 64, cx, cy, r));
    }

    ganseg::GanConfig config;
    config.input_side = 64;
    const int steps = 1500;
    auto state = ganseg::build_gan(config, 7);

    const auto t0 = Clock::now();
    pipeline::train_gan(*state, samples, steps, 9);
    const double train_seconds = seconds_since(t0);

    int non_finite = 0;
    for (const auto& point : state->trace()) {
        if (!std::isfinite(point.generator_adversarial) || !std::isfinite(point.reconstruction) ||
            !std::isfinite(point.discriminator_real) || !std::isfinite(point.discriminator_fake))
            ++non_finite;
    }

    double total_e = 0.0;
    for (const auto& sample : samples) {
        const auto pred = ganseg::predict_gan(*state, load_image(sample.image_path));
        total_e += eval::segmentation_error(pred, corpus::load_mask(*sample.mask_path));
    }
    const double mean_e = total_e / static_cast<double>(samples.size());

    detail = std::to_string(steps) + " steps, mean train E " + num(mean_e) + ", " +
             std::to_string(non_finite) + " non-finite trace points, " + num(train_seconds) +
             " s";
    return steps <= 3000 && mean_e < 0.05 && non_finite == 0;
}

// ---------------------------------------------------------------------------
// 9. Full experiment run on a generated dataset.

bool overlay_matches_confusion(const Image& overlay, const Image& image, const BinaryMask& pred,
                               const BinaryMask& truth, std::string& why) {
    if (overlay.channels != 3 || overlay.width != image.width || overlay.height != image.height) {
        why = "overlay dimensions";
        return false;
    }
    const Image base = to_rgb(image);
    for (int y = 0; y < overlay.height; ++y)
        for (int x = 0; x < overlay.width; ++x) {
            const bool p = pred.at(y, x) != 0;
            const bool t = truth.at(y, x) != 0;
            const std::uint8_t r = overlay.at(y, x, 0);
            const std::uint8_t g = overlay.at(y, x, 1);
            const std::uint8_t b = overlay.at(y, x, 2);
            const bool green = r == 0 && g == 255 && b == 0;
            const bool red = r == 255 && g == 0 && b == 0;
            if (p && !t) {
                if (!green) {
                    why = "false positive not green at " + std::to_string(x) + "," +
                          std::to_string(y);
                    return false;
                }
            } else if (!p && t) {
                if (!red) {
                    why = "false negative not red at " + std::to_string(x) + "," +
                          std::to_string(y);
                    return false;
                }
            } else if (r != base.at(y, x, 0) || g != base.at(y, x, 1) || b != base.at(y, x, 2)) {
                why = "agreeing pixel modified at " + std::to_string(x) + "," + std::to_string(y);
                return false;
            }
        }
    return true;
}

bool end_to_end_experiment(std::string& detail) {
    const auto data_dir = work_dir("e2e_data");
    const auto out_dir = work_dir("e2e_out");
    const auto manifest = pipeline::generate_synthetic_dataset(40, 64, 1234, data_dir.string());

    pipeline::ExperimentConfig config;
    config.model = pipeline::ModelKind::FCN;
    config.scope = {pipeline::ScopeKind::SingleDataset, "synthetic"};
    config.iterations = 2000;
    config.learning_rate = 1e-4;
    config.output_dir = out_dir.string();
    config.seed = 42;

    const auto result = pipeline::run_experiment(manifest, config);

    if (eval::read_records_csv(result.csv_path).size() != result.records.size()) {
        detail = "csv row count mismatch";
        return false;
    }
    std::ifstream report_in(result.report_path);
    std::stringstream report;
    report << report_in.rdbuf();
    const std::string report_text = report.str();
    for (const char* needle : {"pooled results", "E  mean", "F1 mean", " std "})
        if (report_text.find(needle) == std::string::npos) {
            detail = std::string("report lacks '") + needle + "'";
            return false;
        }

    std::map<std::string, corpus::ImageSample> by_id;
    for (const auto& sample : corpus::load_manifest(manifest)) by_id[sample.id] = sample;
    auto model = fcnseg::build_fcn(fcnseg::FcnConfig{}, result.checkpoint_path);
    for (const auto& [id, overlay_path] :
         {std::pair{result.best_id, result.best_overlay_path},
          std::pair{result.worst_id, result.worst_overlay_path}}) {
        const auto& sample = by_id.at(id);
        const Image image = load_image(sample.image_path);
        const BinaryMask truth = corpus::load_mask(*sample.mask_path);
        const BinaryMask pred = pipeline::predict_fcn_padded(*model, image);
        std::string why;
        if (!overlay_matches_confusion(load_image(overlay_path), image, pred, truth, why)) {
            detail = "overlay for " + id + ": " + why;
            return false;
        }
    }

    detail = "n=" + std::to_string(result.pooled.n) + ", mean test E " +
             num(result.pooled.mean_e) + ", best " + result.best_id + " worst " +
             result.worst_id + ", overlays match confusion exactly";
    return result.pooled.mean_e < 0.05;
}

// ---------------------------------------------------------------------------
// 10. Bitwise repeatability of experiment runs.

bool records_identical(const std::vector<eval::EvalRecord>& a,
                       const std::vector<eval::EvalRecord>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].sample_id != b[i].sample_id || a[i].e != b[i].e || a[i].f1 != b[i].f1 ||
            a[i].counts.tp != b[i].counts.tp || a[i].counts.fp != b[i].counts.fp ||
            a[i].counts.tn != b[i].counts.tn || a[i].counts.fn != b[i].counts.fn)
            return false;
    }
    return true;
}

bool run_determinism(std::string& detail) {
    const auto data_dir = work_dir("determinism_data");
    const auto manifest = pipeline::generate_synthetic_dataset(12, 64, 55, data_dir.string());

    pipeline::ExperimentConfig fcn_config;
    fcn_config.model = pipeline::ModelKind::FCN;
    fcn_config.scope = {pipeline::ScopeKind::SingleDataset, "synthetic"};
    fcn_config.iterations = 40;
    fcn_config.learning_rate = 1e-4;
    fcn_config.seed = 7;

    fcn_config.output_dir = work_dir("determinism_fcn_a").string();
    const auto fcn_a = pipeline::run_experiment(manifest, fcn_config);
    fcn_config.output_dir = work_dir("determinism_fcn_b").string();
    const auto fcn_b = pipeline::run_experiment(manifest, fcn_config);
    if (!records_identical(fcn_a.records, fcn_b.records)) {
        detail = "fcn rerun diverged";
        return false;
    }

    pipeline::ExperimentConfig gan_config;
    gan_config.model = pipeline::ModelKind::GAN;
    gan_config.scope = {pipeline::ScopeKind::SingleDataset, "synthetic"};
    gan_config.iterations = 8;
    gan_config.gan_input_side = 64;
    gan_config.seed = 13;

    gan_config.output_dir = work_dir("determinism_gan_a").string();
    const auto gan_a = pipeline::run_experiment(manifest, gan_config);
    gan_config.output_dir = work_dir("determinism_gan_b").string();
    const auto gan_b = pipeline::run_experiment(manifest, gan_config);
    if (!records_identical(gan_a.records, gan_b.records)) {
        detail = "gan rerun diverged";
        return false;
    }

    detail = "fcn (40 iterations) and gan (8 steps) reruns bitwise-identical across " +
             std::to_string(fcn_a.records.size() + gan_a.records.size()) + " records";
    return true;
}

struct Criterion {
    const char* name;
    bool (*check)(std::string&);
};

}  // namespace

int main() {
    const Criterion criteria[] = {
        {"pixel-metric-oracle", pixel_metric_oracle},
        {"error-boundary-cases", error_boundary_cases},
        {"paired-t-test-oracle", paired_t_test_oracle},
        {"roi-geometry-properties", roi_geometry_properties},
        {"detector-layer-table", detector_layer_table},
        {"fcn-gradient-check", fcn_gradient_check},
        {"fcn-disc-overfit", fcn_disc_overfit},
        {"gan-disc-overfit", gan_disc_overfit},
        {"end-to-end-experiment", end_to_end_experiment},
        {"run-determinism", run_determinism},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        const auto t0 = Clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = criterion.check(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("%s  %-26s (%.1f s)  %s\n", ok ? "PASS" : "FAIL", criterion.name,
                    seconds_since(t0), detail.c_str());
        std::fflush(stdout);
        failures += ok ? 0 : 1;
    }

    const int total = static_cast<int>(std::size(criteria));
    std::printf("%d of %d criteria passed\n", total - failures, total);
    return failures;
}
