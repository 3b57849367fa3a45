#include "iris/fcnseg/fcn.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "iris/corpus/mask_io.hpp"
#include "iris/error.hpp"
#include "iris/nn/adam.hpp"
#include "iris/nn/checkpoint.hpp"
#include "iris/nn/convert.hpp"

namespace iris::fcnseg {

using nn::Conv2d;
using nn::ConvTranspose2d;
using nn::Dropout;
using nn::MaxPool2d;
using nn::ReLU;
using nn::Tensor;

void FcnConfig::validate() const {
    if (learning_rate <= 0) throw ConfigError("learning_rate must be positive");
    if (dropout_probability < 0 || dropout_probability >= 1)
        throw ConfigError("dropout_probability must be in [0, 1)");
    if (weight_decay < 0) throw ConfigError("weight_decay must be non-negative");
    if (skip_init_std <= 0) throw ConfigError("skip_init_std must be positive");
    if (iterations < 1) throw ConfigError("iterations must be at least 1");
    if (batch_size != 1) throw ConfigError("only batch_size 1 is supported");
    if (num_classes != 2) throw ConfigError("the segmentation head is two-class");
}

namespace {

Tensor<float> add(const Tensor<float>& a, const Tensor<float>& b) {
    nn::require_same_shape(a, b, "skip fusion");
    Tensor<float> out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

nlohmann::json config_to_json(const FcnConfig& c) {
    return {{"learning_rate", c.learning_rate},
            {"dropout_probability", c.dropout_probability},
            {"weight_decay", c.weight_decay},
            {"skip_init_std", c.skip_init_std},
            {"iterations", c.iterations},
            {"batch_size", c.batch_size},
            {"num_classes", c.num_classes}};
}

}  // namespace

FcnModel::FcnModel(const FcnConfig& config, unsigned init_seed)
    : config_(config),
      init_rng_(init_seed),
      dropout_rng_(init_seed + 1),
      upscore2_(2, 2, 4, 2, 1, false),
      score_pool4_(512, 2, 1, 1, 0),
      upscore4_(2, 2, 4, 2, 1, false),
      score_pool3_(256, 2, 1, 1, 0),
      upscore8_(2, 2, 16, 8, 4, false) {
    config_.validate();
    const float p = static_cast<float>(config_.dropout_probability);

    auto conv = [&](nn::Sequential<float>& seq, const char* name, int in, int out) {
        auto* c = seq.emplace<Conv2d<float>>(name, in, out, 3, 1, 1);
        c->init_he(init_rng_);
        seq.emplace<ReLU<float>>(std::string(name) + "_relu");
    };

    conv(to_pool3_, "conv1_1", 3, 64);
    conv(to_pool3_, "conv1_2", 64, 64);
    to_pool3_.emplace<MaxPool2d<float>>("pool1", 2, 2);
    conv(to_pool3_, "conv2_1", 64, 128);
    conv(to_pool3_, "conv2_2", 128, 128);
    to_pool3_.emplace<MaxPool2d<float>>("pool2", 2, 2);
    conv(to_pool3_, "conv3_1", 128, 256);
    conv(to_pool3_, "conv3_2", 256, 256);
    conv(to_pool3_, "conv3_3", 256, 256);
    to_pool3_.emplace<MaxPool2d<float>>("pool3", 2, 2);

    conv(to_pool4_, "conv4_1", 256, 512);
    conv(to_pool4_, "conv4_2", 512, 512);
    conv(to_pool4_, "conv4_3", 512, 512);
    to_pool4_.emplace<MaxPool2d<float>>("pool4", 2, 2);

    conv(to_pool5_, "conv5_1", 512, 512);
    conv(to_pool5_, "conv5_2", 512, 512);
    conv(to_pool5_, "conv5_3", 512, 512);
    to_pool5_.emplace<MaxPool2d<float>>("pool5", 2, 2);

    head_.emplace<Conv2d<float>>("fc6", 512, 4096, 1, 1, 0)->init_he(init_rng_);
    head_.emplace<ReLU<float>>("fc6_relu");
    head_.emplace<Dropout<float>>("fc6_drop", p, &dropout_rng_);
    head_.emplace<Conv2d<float>>("fc7", 4096, 4096, 1, 1, 0)->init_he(init_rng_);
    head_.emplace<ReLU<float>>("fc7_relu");
    head_.emplace<Dropout<float>>("fc7_drop", p, &dropout_rng_);
    head_.emplace<Conv2d<float>>("score_fr", 4096, 2, 1, 1, 0)->init_he(init_rng_);

    upscore2_.init_bilinear();
    upscore4_.init_bilinear();
    upscore8_.init_bilinear();
    score_pool3_.init_normal(init_rng_, config_.skip_init_std);
    score_pool4_.init_normal(init_rng_, config_.skip_init_std);
}

Tensor<float> FcnModel::forward(const Tensor<float>& input, bool train) {
    if (input.n != 1 || input.c != 3)
        throw ConfigError("expected a [1,3,H,W] input tensor, got " + input.shape_string());
    if (input.h < 32 || input.w < 32 || input.h % 32 != 0 || input.w % 32 != 0)
        throw ConfigError("input dimensions must be positive multiples of 32, got " +
                          std::to_string(input.w) + "x" + std::to_string(input.h));

    const Tensor<float> p3 = to_pool3_.forward(input, train);
    const Tensor<float> p4 = to_pool4_.forward(p3, train);
    const Tensor<float> p5 = to_pool5_.forward(p4, train);
    const Tensor<float> f = head_.forward(p5, train);

    const Tensor<float> sum4 = add(upscore2_.forward(f, train), score_pool4_.forward(p4, train));
    const Tensor<float> sum3 =
        add(upscore4_.forward(sum4, train), score_pool3_.forward(p3, train));
    return upscore8_.forward(sum3, train);
}

Tensor<float> FcnModel::backward(const Tensor<float>& dlogits) {
    const Tensor<float> dsum3 = upscore8_.backward(dlogits);
    const Tensor<float> dp3_skip = score_pool3_.backward(dsum3);
    const Tensor<float> dsum4 = upscore4_.backward(dsum3);
    const Tensor<float> dp4_skip = score_pool4_.backward(dsum4);
    const Tensor<float> df = upscore2_.backward(dsum4);

    const Tensor<float> dp5 = head_.backward(df);
    const Tensor<float> dp4 = add(to_pool5_.backward(dp5), dp4_skip);
    const Tensor<float> dp3 = add(to_pool4_.backward(dp4), dp3_skip);
    return to_pool3_.backward(dp3);
}

std::vector<nn::ParamRef<float>> FcnModel::params() {
    std::vector<nn::ParamRef<float>> out;
    to_pool3_.collect_params("encoder", out);
    to_pool4_.collect_params("encoder", out);
    to_pool5_.collect_params("encoder", out);
    head_.collect_params("head", out);
    upscore2_.collect_params("decoder.upscore2", out);
    score_pool4_.collect_params("decoder.score_pool4", out);
    upscore4_.collect_params("decoder.upscore4", out);
    score_pool3_.collect_params("decoder.score_pool3", out);
    upscore8_.collect_params("decoder.upscore8", out);
    return out;
}

void FcnModel::load_weights(const std::string& path, bool require_complete) {
    auto p = params();
    nn::load_checkpoint(path, p, require_complete);
}

std::unique_ptr<FcnModel> build_fcn(const FcnConfig& config, const std::string& pretrained,
                                    unsigned init_seed) {
    config.validate();
    auto model = std::make_unique<FcnModel>(config, init_seed);
    if (!pretrained.empty()) model->load_weights(pretrained, false);
    return model;
}

nn::LossResult<float> fcn_loss(const nn::Tensor<float>& logits, const BinaryMask& target) {
    if (logits.h != target.height || logits.w != target.width)
        throw ValidationError("logits " + logits.shape_string() + " do not match mask " +
                              std::to_string(target.width) + "x" + std::to_string(target.height));
    return nn::softmax_cross_entropy(logits, nn::mask_to_labels(target));
}

std::vector<TracePoint> train_fcn(FcnModel& model, const std::vector<corpus::ImageSample>& samples,
                                  const FcnConfig& config, const FcnTrainOptions& options) {
    config.validate();
    if (samples.empty()) throw ValidationError("training requires at least one sample");

    std::string missing;
    for (const auto& s : samples)
        if (!s.mask_path) missing += (missing.empty() ? "" : ", ") + s.id;
    if (!missing.empty()) throw ValidationError("samples lack masks: " + missing);

    std::vector<Tensor<float>> inputs;
    std::vector<Tensor<std::uint8_t>> labels;
    inputs.reserve(samples.size());
    labels.reserve(samples.size());
    for (const auto& s : samples) {
        const Image image = load_image(s.image_path);
        const BinaryMask mask = corpus::load_mask(*s.mask_path);
        if (mask.width != image.width || mask.height != image.height)
            throw ValidationError("sample " + s.id + ": mask size does not match image size");
        inputs.push_back(nn::image_to_input(image));
        labels.push_back(nn::mask_to_labels(mask));
    }

    auto params = model.params();
    nn::Adam<float> opt(config.learning_rate, 0.9, 0.999, 1e-8, config.weight_decay);
    Rng order_rng(options.seed);
    std::vector<int> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    const int trace_every = std::max(1, options.trace_every);
    std::vector<TracePoint> trace;

    const auto checkpoint = [&](int iteration) {
        nlohmann::json meta{{"format", "fcn-checkpoint"},
                            {"version", 1},
                            {"iteration", iteration},
                            {"config", config_to_json(config)}};
        nn::save_checkpoint(options.checkpoint_path, meta, params);
    };

    for (int it = 1; it <= config.iterations; ++it) {
        const int pos = (it - 1) % static_cast<int>(samples.size());
        if (pos == 0) order_rng.shuffle(order.begin(), order.end());
        const int idx = order[pos];

        nn::zero_grads(params);
        const Tensor<float> logits = model.forward(inputs[idx], true);
        const auto loss = nn::softmax_cross_entropy(logits, labels[idx]);
        model.backward(loss.grad);
        opt.step(params);

        if (it % trace_every == 0 || it == config.iterations) {
            const TracePoint point{it, loss.loss};
            trace.push_back(point);
            if (options.on_trace) options.on_trace(point);
        }
        if (!options.checkpoint_path.empty() && options.checkpoint_every > 0 &&
            it % options.checkpoint_every == 0 && it != config.iterations)
            checkpoint(it);
    }

    if (!options.checkpoint_path.empty()) checkpoint(config.iterations);
    return trace;
}

BinaryMask predict_fcn(FcnModel& model, const Image& image) {
    const Tensor<float> logits = model.forward(nn::image_to_input(image), false);
    return nn::logits_to_mask(logits);
}

void write_trace(const std::vector<TracePoint>& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write trace file: " + path);
    out.precision(17);
    for (const auto& p : trace) out << p.iteration << ' ' << p.loss << '\n';
    if (!out) throw IoError("failed writing trace file: " + path);
}

std::vector<TracePoint> read_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace file: " + path);
    std::vector<TracePoint> trace;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream s(line);
        TracePoint p;
        if (!(s >> p.iteration >> p.loss))
            throw ParseError("trace line " + std::to_string(line_no) + " is malformed: " + line);
        trace.push_back(p);
    }
    return trace;
}

}  // namespace iris::fcnseg
