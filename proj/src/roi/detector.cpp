#include "iris/roi/detector.hpp"

#include <algorithm>
#include <cmath>

#include "iris/corpus/mask_io.hpp"
#include "iris/error.hpp"
#include "iris/nn/adam.hpp"
#include "iris/nn/checkpoint.hpp"

namespace iris::roi {

using nn::Tensor;

void DetectorConfig::validate() const {
    if (input_channels != 1 && input_channels != 3)
        throw ConfigError("detector input must have 1 or 3 channels, got " +
                          std::to_string(input_channels));
    if (learning_rate <= 0) throw ConfigError("learning_rate must be positive");
    if (iterations < 1) throw ConfigError("iterations must be at least 1");
    if (lambda_coord < 0 || lambda_noobj < 0)
        throw ConfigError("loss weights must be non-negative");
    if (ignore_iou < 0 || ignore_iou > 1) throw ConfigError("ignore_iou must be in [0, 1]");
    if (!anchors.empty() && static_cast<int>(anchors.size()) != Detector::num_anchors)
        throw ConfigError("expected " + std::to_string(Detector::num_anchors) + " anchors, got " +
                          std::to_string(anchors.size()));
}

namespace {

constexpr int kFilterCounts[] = {16, 32, 64, 128, 256, 512, 1024, 1024};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// IoU of two boxes given as (cx, cy, w, h).
double box_iou(double acx, double acy, double aw, double ah, double bcx, double bcy, double bw,
               double bh) {
    const double ix = std::max(
        0.0, std::min(acx + aw / 2, bcx + bw / 2) - std::max(acx - aw / 2, bcx - bw / 2));
    const double iy = std::max(
        0.0, std::min(acy + ah / 2, bcy + bh / 2) - std::max(acy - ah / 2, bcy - bh / 2));
    const double inter = ix * iy;
    const double uni = aw * ah + bw * bh - inter;
    return uni <= 0 ? 0.0 : inter / uni;
}

/// IoU of two box shapes sharing a center.
double shape_iou(double w1, double h1, double w2, double h2) {
    const double inter = std::min(w1, w2) * std::min(h1, h2);
    const double uni = w1 * h1 + w2 * h2 - inter;
    return uni <= 0 ? 0.0 : inter / uni;
}

Tensor<float> to_detector_input(const Image& image, int channels) {
    const Image resized = resize_bilinear(image, Detector::input_side, Detector::input_side);
    Tensor<float> t(1, channels, Detector::input_side, Detector::input_side);
    for (int y = 0; y < resized.height; ++y)
        for (int x = 0; x < resized.width; ++x) {
            if (channels == 3) {
                for (int c = 0; c < 3; ++c)
                    t.at(0, c, y, x) =
                        resized.at(y, x, resized.channels == 1 ? 0 : c) / 127.5f - 1.0f;
            } else {
                double v;
                if (resized.channels == 3)
                    v = 0.299 * resized.at(y, x, 0) + 0.587 * resized.at(y, x, 1) +
                        0.114 * resized.at(y, x, 2);
                else
                    v = resized.at(y, x);
                t.at(0, 0, y, x) = static_cast<float>(v / 127.5 - 1.0);
            }
        }
    return t;
}

nlohmann::json config_to_json(const DetectorConfig& c) {
    nlohmann::json anchors = nlohmann::json::array();
    for (const auto& [w, h] : c.anchors) anchors.push_back({w, h});
    return {{"input_channels", c.input_channels}, {"learning_rate", c.learning_rate},
            {"iterations", c.iterations},         {"lambda_coord", c.lambda_coord},
            {"lambda_noobj", c.lambda_noobj},     {"ignore_iou", c.ignore_iou},
            {"anchors", anchors}};
}

DetectorConfig config_from_json(const nlohmann::json& j) {
    DetectorConfig c;
    c.input_channels = j.at("input_channels");
    c.learning_rate = j.at("learning_rate");
    c.iterations = j.at("iterations");
    c.lambda_coord = j.at("lambda_coord");
    c.lambda_noobj = j.at("lambda_noobj");
    c.ignore_iou = j.at("ignore_iou");
    for (const auto& a : j.at("anchors")) c.anchors.emplace_back(a.at(0), a.at(1));
    return c;
}

}  // namespace

Detector::Detector(int input_channels, unsigned seed) : channels_(input_channels), init_rng_(seed) {
    if (input_channels != 1 && input_channels != 3)
        throw ConfigError("detector input must have 1 or 3 channels, got " +
                          std::to_string(input_channels));

    int in_c = channels_;
    for (int i = 0; i < 8; ++i) {
        const std::string name = "conv" + std::to_string(i + 1);
        auto* conv = net_.emplace<nn::Conv2d<float>>(name, in_c, kFilterCounts[i], 3, 1, 1);
        conv->init_he(init_rng_);
        net_.emplace<nn::InstanceNorm<float>>(name + "_norm", kFilterCounts[i]);
        net_.emplace<nn::LeakyReLU<float>>(name + "_act", 0.1);
        if (i < 5)
            net_.emplace<nn::MaxPool2d<float>>("pool" + std::to_string(i + 1), 2, 2);
        else if (i == 5)
            net_.emplace<nn::MaxPool2d<float>>("pool6", 2, 1, 1, 1);
        in_c = kFilterCounts[i];
    }
    net_.emplace<nn::Conv2d<float>>("conv9", in_c, 30, 1, 1, 0)->init_he(init_rng_);
}

Tensor<float> Detector::forward(const Tensor<float>& x, bool train) {
    if (x.n != 1 || x.c != channels_ || x.h != input_side || x.w != input_side)
        throw ValidationError("detector expects a [1," + std::to_string(channels_) + "," +
                              std::to_string(input_side) + "," + std::to_string(input_side) +
                              "] input, got " + x.shape_string());
    return net_.forward(x, train);
}

Tensor<float> Detector::backward(const Tensor<float>& dy) { return net_.backward(dy); }

std::vector<nn::ParamRef<float>> Detector::params() {
    std::vector<nn::ParamRef<float>> out;
    net_.collect_params("detector", out);
    return out;
}

std::vector<LayerShape> Detector::layer_shapes(int side) {
    std::vector<LayerShape> rows;
    int s = side;
    for (int i = 0; i < 8; ++i) {
        rows.push_back({"conv" + std::to_string(i + 1), kFilterCounts[i], s, s});
        if (i < 5) {
            s /= 2;
            rows.push_back({"pool" + std::to_string(i + 1), kFilterCounts[i], s, s});
        } else if (i == 5) {
            rows.push_back({"pool6", kFilterCounts[i], s, s});
        }
    }
    rows.push_back({"conv9", 30, s, s});
    return rows;
}

std::unique_ptr<Detector> build_detector(int input_channels, unsigned seed) {
    return std::make_unique<Detector>(input_channels, seed);
}

AnchorSet kmeans_anchors(const std::vector<std::pair<double, double>>& box_sizes, int k,
                         int iterations) {
    if (box_sizes.empty()) throw ValidationError("anchor clustering needs at least one box");

    std::vector<std::pair<double, double>> sorted = box_sizes;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        return a.first * a.second < b.first * b.second;
    });

    AnchorSet centers(k);
    const int n = static_cast<int>(sorted.size());
    for (int i = 0; i < k; ++i)
        centers[i] = sorted[k == 1 ? n / 2 : (i * (n - 1)) / (k - 1)];

    std::vector<int> assign(n, -1);
    for (int round = 0; round < iterations; ++round) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = 2.0;
            for (int c = 0; c < k; ++c) {
                const double d = 1.0 - shape_iou(sorted[i].first, sorted[i].second,
                                                 centers[c].first, centers[c].second);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        if (!changed) break;

        for (int c = 0; c < k; ++c) {
            double sw = 0, sh = 0;
            int count = 0;
            for (int i = 0; i < n; ++i)
                if (assign[i] == c) {
                    sw += sorted[i].first;
                    sh += sorted[i].second;
                    ++count;
                }
            if (count > 0) centers[c] = {sw / count, sh / count};  // empty keeps previous
        }
    }
    return centers;
}

template <typename T>
YoloLoss yolo_loss(const Tensor<T>& head, const std::vector<GtBox>& truth,
                   const AnchorSet& anchors, const DetectorConfig& config, Tensor<T>& grad) {
    const int g = Detector::grid_side;
    const int na = Detector::num_anchors;
    if (head.n != 1 || head.c != na * 6 || head.h != g || head.w != g)
        throw ValidationError("detection head must be [1," + std::to_string(na * 6) + "," +
                              std::to_string(g) + "," + std::to_string(g) + "], got " +
                              head.shape_string());
    if (static_cast<int>(anchors.size()) != na)
        throw ValidationError("expected " + std::to_string(na) + " anchors");

    grad = Tensor<T>(head.n, head.c, head.h, head.w);

    // Responsible (cell, anchor) per truth: the truth's center cell and the
    // anchor whose shape best overlaps the truth box.
    struct Responsible {
        int cy, cx, anchor;
        double tx, ty, tw, th;
    };
    std::vector<Responsible> responsible;
    for (const auto& t : truth) {
        if (t.w <= 0 || t.h <= 0) throw ValidationError("ground-truth box has no area");
        const double gx = t.cx * g, gy = t.cy * g;
        const int cx = std::clamp(static_cast<int>(gx), 0, g - 1);
        const int cy = std::clamp(static_cast<int>(gy), 0, g - 1);
        int best = 0;
        double best_iou = -1;
        for (int a = 0; a < na; ++a) {
            const double iou = shape_iou(t.w * g, t.h * g, anchors[a].first, anchors[a].second);
            if (iou > best_iou) {
                best_iou = iou;
                best = a;
            }
        }
        responsible.push_back({cy, cx, best, gx - cx, gy - cy,
                               std::log(t.w * g / anchors[best].first),
                               std::log(t.h * g / anchors[best].second)});
    }

    YoloLoss loss;
    for (int a = 0; a < na; ++a) {
        const int base = a * 6;
        for (int cy = 0; cy < g; ++cy)
            for (int cx = 0; cx < g; ++cx) {
                const Responsible* resp = nullptr;
                for (const auto& r : responsible)
                    if (r.cy == cy && r.cx == cx && r.anchor == a) resp = &r;

                const double to = head.at(0, base + 4, cy, cx);
                const double so = sigmoid(to);

                if (resp) {
                    const double sx = sigmoid(head.at(0, base + 0, cy, cx));
                    const double sy = sigmoid(head.at(0, base + 1, cy, cx));
                    const double tw = head.at(0, base + 2, cy, cx);
                    const double th = head.at(0, base + 3, cy, cx);
                    const double cls = head.at(0, base + 5, cy, cx);
                    const double sc = sigmoid(cls);

                    loss.coord += config.lambda_coord *
                                  ((sx - resp->tx) * (sx - resp->tx) +
                                   (sy - resp->ty) * (sy - resp->ty) +
                                   (tw - resp->tw) * (tw - resp->tw) +
                                   (th - resp->th) * (th - resp->th));
                    loss.objectness += (so - 1) * (so - 1);
                    loss.classification += (sc - 1) * (sc - 1);

                    grad.at(0, base + 0, cy, cx) = static_cast<T>(
                        config.lambda_coord * 2 * (sx - resp->tx) * sx * (1 - sx));
                    grad.at(0, base + 1, cy, cx) = static_cast<T>(
                        config.lambda_coord * 2 * (sy - resp->ty) * sy * (1 - sy));
                    grad.at(0, base + 2, cy, cx) =
                        static_cast<T>(config.lambda_coord * 2 * (tw - resp->tw));
                    grad.at(0, base + 3, cy, cx) =
                        static_cast<T>(config.lambda_coord * 2 * (th - resp->th));
                    grad.at(0, base + 4, cy, cx) = static_cast<T>(2 * (so - 1) * so * (1 - so));
                    grad.at(0, base + 5, cy, cx) = static_cast<T>(2 * (sc - 1) * sc * (1 - sc));
                    continue;
                }

                // Suppress objectness only where the decoded box misses every
                // truth; confident overlaps are left alone.
                const double bx = (sigmoid(head.at(0, base + 0, cy, cx)) + cx) / g;
                const double by = (sigmoid(head.at(0, base + 1, cy, cx)) + cy) / g;
                const double bw = anchors[a].first * std::exp(head.at(0, base + 2, cy, cx)) / g;
                const double bh = anchors[a].second * std::exp(head.at(0, base + 3, cy, cx)) / g;
                double best_iou = 0;
                for (const auto& t : truth)
                    best_iou = std::max(best_iou, box_iou(bx, by, bw, bh, t.cx, t.cy, t.w, t.h));
                if (best_iou < config.ignore_iou) {
                    loss.no_object += config.lambda_noobj * so * so;
                    grad.at(0, base + 4, cy, cx) =
                        static_cast<T>(config.lambda_noobj * 2 * so * so * (1 - so));
                }
            }
    }
    loss.total = loss.coord + loss.objectness + loss.no_object + loss.classification;
    return loss;
}

template YoloLoss yolo_loss<float>(const Tensor<float>&, const std::vector<GtBox>&,
                                   const AnchorSet&, const DetectorConfig&, Tensor<float>&);
template YoloLoss yolo_loss<double>(const Tensor<double>&, const std::vector<GtBox>&,
                                    const AnchorSet&, const DetectorConfig&, Tensor<double>&);

std::vector<Detection> decode_detections(const Tensor<float>& head, const AnchorSet& anchors,
                                         int image_width, int image_height) {
    const int g = Detector::grid_side;
    const int na = Detector::num_anchors;
    if (head.n != 1 || head.c != na * 6 || head.h != g || head.w != g)
        throw ValidationError("detection head must be [1," + std::to_string(na * 6) + "," +
                              std::to_string(g) + "," + std::to_string(g) + "], got " +
                              head.shape_string());
    if (static_cast<int>(anchors.size()) != na)
        throw ValidationError("expected " + std::to_string(na) + " anchors");

    std::vector<Detection> out;
    out.reserve(static_cast<std::size_t>(g) * g * na);
    for (int a = 0; a < na; ++a) {
        const int base = a * 6;
        for (int cy = 0; cy < g; ++cy)
            for (int cx = 0; cx < g; ++cx) {
                const double bx = (sigmoid(head.at(0, base + 0, cy, cx)) + cx) / g;
                const double by = (sigmoid(head.at(0, base + 1, cy, cx)) + cy) / g;
                const double bw = anchors[a].first * std::exp(head.at(0, base + 2, cy, cx)) / g;
                const double bh = anchors[a].second * std::exp(head.at(0, base + 3, cy, cx)) / g;
                Detection d;
                d.x_min = (bx - bw / 2) * image_width;
                d.x_max = (bx + bw / 2) * image_width;
                d.y_min = (by - bh / 2) * image_height;
                d.y_max = (by + bh / 2) * image_height;
                d.confidence = sigmoid(head.at(0, base + 4, cy, cx)) *
                               sigmoid(head.at(0, base + 5, cy, cx));
                out.push_back(d);
            }
    }
    return out;
}

std::vector<Detection> predict_detections(Detector& model, const AnchorSet& anchors,
                                          const Image& image) {
    const Tensor<float> head =
        model.forward(to_detector_input(image, model.input_channels()), false);
    return decode_detections(head, anchors, image.width, image.height);
}

DetectorTrainResult train_detector(Detector& model,
                                   const std::vector<corpus::ImageSample>& samples,
                                   const DetectorConfig& config,
                                   const DetectorTrainOptions& options) {
    config.validate();
    if (samples.empty()) throw ValidationError("training requires at least one sample");

    std::vector<Tensor<float>> inputs;
    std::vector<GtBox> boxes;
    std::string missing;
    for (const auto& s : samples) {
        const Image image = load_image(s.image_path);
        std::optional<Detection> box;
        if (s.box) {
            box = Detection{s.box->x_min, s.box->y_min, s.box->x_max, s.box->y_max, 1.0};
            if (box->width() <= 0 || box->height() <= 0) box.reset();
        } else if (s.mask_path) {
            box = mask_bounding_box(corpus::load_mask(*s.mask_path));
        }
        if (!box) {
            missing += (missing.empty() ? "" : ", ") + s.id;
            continue;
        }
        inputs.push_back(to_detector_input(image, model.input_channels()));
        boxes.push_back({(box->x_min + box->x_max) / 2 / image.width,
                         (box->y_min + box->y_max) / 2 / image.height,
                         box->width() / image.width, box->height() / image.height});
    }
    if (!missing.empty())
        throw ValidationError("samples lack a usable box or mask: " + missing);

    DetectorTrainResult result;
    if (config.anchors.empty()) {
        std::vector<std::pair<double, double>> sizes;
        for (const auto& b : boxes)
            sizes.emplace_back(b.w * Detector::grid_side, b.h * Detector::grid_side);
        result.anchors = kmeans_anchors(sizes, Detector::num_anchors);
    } else {
        result.anchors = config.anchors;
    }

    auto params = model.params();
    nn::Adam<float> opt(config.learning_rate);
    Rng order_rng(options.seed);
    std::vector<int> order(inputs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    const int trace_every = std::max(1, options.trace_every);

    const auto checkpoint = [&](int iteration) {
        save_detector(model, result.anchors, config, iteration, options.checkpoint_path);
    };

    for (int it = 1; it <= config.iterations; ++it) {
        const int pos = (it - 1) % static_cast<int>(inputs.size());
        if (pos == 0) order_rng.shuffle(order.begin(), order.end());
        const int idx = order[pos];

        nn::zero_grads(params);
        const Tensor<float> head = model.forward(inputs[idx], true);
        Tensor<float> dhead;
        const YoloLoss loss = yolo_loss(head, {boxes[idx]}, result.anchors, config, dhead);
        model.backward(dhead);
        opt.step(params);

        if (it % trace_every == 0 || it == config.iterations)
            result.trace.emplace_back(it, loss.total);
        if (!options.checkpoint_path.empty() && options.checkpoint_every > 0 &&
            it % options.checkpoint_every == 0 && it != config.iterations)
            checkpoint(it);
    }
    if (!options.checkpoint_path.empty()) checkpoint(config.iterations);
    return result;
}

void save_detector(Detector& model, const AnchorSet& anchors, const DetectorConfig& config,
                   int iteration, const std::string& path) {
    DetectorConfig echo = config;
    echo.anchors = anchors;
    echo.input_channels = model.input_channels();
    nlohmann::json meta{{"format", "detector-checkpoint"},
                        {"version", 1},
                        {"iteration", iteration},
                        {"config", config_to_json(echo)}};
    auto params = model.params();
    nn::save_checkpoint(path, meta, params);
}

LoadedDetector load_detector(const std::string& path) {
    const auto meta = nn::read_checkpoint_meta(path);
    if (!meta.contains("format") || meta["format"] != "detector-checkpoint")
        throw ConfigError("not a detector checkpoint: " + path);
    LoadedDetector out;
    out.config = config_from_json(meta.at("config"));
    out.anchors = out.config.anchors;
    out.model = build_detector(out.config.input_channels);
    auto params = out.model->params();
    nn::load_checkpoint(path, params);
    return out;
}

}  // namespace iris::roi
