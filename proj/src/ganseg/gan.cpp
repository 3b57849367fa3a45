#include "iris/ganseg/gan.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "iris/error.hpp"
#include "iris/nn/checkpoint.hpp"
#include "iris/nn/convert.hpp"
#include "iris/nn/losses.hpp"

namespace iris::ganseg {

using nn::Tensor;

void GanConfig::validate() const {
    if (input_side < 64 || (input_side & (input_side - 1)) != 0)
        throw ConfigError("input_side must be a power of two no smaller than 64, got " +
                          std::to_string(input_side));
    if (adversarial_weight < 0 || reconstruction_weight < 0)
        throw ConfigError("loss weights must be non-negative");
    if (learning_rate <= 0) throw ConfigError("learning_rate must be positive");
    if (beta1 < 0 || beta1 >= 1) throw ConfigError("beta1 must be in [0, 1)");
    if (dropout_probability < 0 || dropout_probability >= 1)
        throw ConfigError("dropout_probability must be in [0, 1)");
    if (iterations < 1) throw ConfigError("iterations must be at least 1");
}

namespace {

Tensor<float> concat_channels(const Tensor<float>& a, const Tensor<float>& b) {
    if (a.n != b.n || a.h != b.h || a.w != b.w)
        throw ValidationError("channel concat requires matching batch and spatial dims: " +
                              a.shape_string() + " vs " + b.shape_string());
    Tensor<float> out(a.n, a.c + b.c, a.h, a.w);
    const std::size_t plane = static_cast<std::size_t>(a.h) * a.w;
    for (int n = 0; n < a.n; ++n) {
        float* dst = out.data.data() + static_cast<std::size_t>(n) * out.c * plane;
        std::copy_n(a.data.data() + static_cast<std::size_t>(n) * a.c * plane, a.c * plane, dst);
        std::copy_n(b.data.data() + static_cast<std::size_t>(n) * b.c * plane, b.c * plane,
                    dst + a.c * plane);
    }
    return out;
}

void split_channels(const Tensor<float>& joint, int first_channels, Tensor<float>& first,
                    Tensor<float>& second) {
    first = Tensor<float>(joint.n, first_channels, joint.h, joint.w);
    second = Tensor<float>(joint.n, joint.c - first_channels, joint.h, joint.w);
    const std::size_t plane = static_cast<std::size_t>(joint.h) * joint.w;
    for (int n = 0; n < joint.n; ++n) {
        const float* src = joint.data.data() + static_cast<std::size_t>(n) * joint.c * plane;
        std::copy_n(src, first.c * plane,
                    first.data.data() + static_cast<std::size_t>(n) * first.c * plane);
        std::copy_n(src + first.c * plane, second.c * plane,
                    second.data.data() + static_cast<std::size_t>(n) * second.c * plane);
    }
}

void accumulate(Tensor<float>& into, const Tensor<float>& from) {
    nn::require_same_shape(into, from, "gradient accumulation");
    for (std::size_t i = 0; i < into.data.size(); ++i) into.data[i] += from.data[i];
}

void scale(Tensor<float>& t, float factor) {
    for (auto& v : t.data) v *= factor;
}

nlohmann::json config_to_json(const GanConfig& c) {
    return {{"input_side", c.input_side},
            {"adversarial_weight", c.adversarial_weight},
            {"reconstruction_weight", c.reconstruction_weight},
            {"learning_rate", c.learning_rate},
            {"beta1", c.beta1},
            {"dropout_probability", c.dropout_probability},
            {"iterations", c.iterations}};
}

GanConfig config_from_json(const nlohmann::json& j) {
    GanConfig c;
    c.input_side = j.at("input_side");
    c.adversarial_weight = j.at("adversarial_weight");
    c.reconstruction_weight = j.at("reconstruction_weight");
    c.learning_rate = j.at("learning_rate");
    c.beta1 = j.at("beta1");
    c.dropout_probability = j.at("dropout_probability");
    c.iterations = j.at("iterations");
    return c;
}

int int_log2(int v) {
    int bits = 0;
    while ((1 << bits) < v) ++bits;
    return bits;
}

}  // namespace

GanGenerator::GanGenerator(const GanConfig& config, Rng* dropout_rng, Rng& init_rng) {
    levels_ = int_log2(config.input_side);
    std::vector<int> ch(levels_);
    for (int i = 0; i < levels_; ++i) ch[i] = std::min(64 << i, 512);

    for (int i = 0; i < levels_; ++i) {
        Down d;
        d.conv = std::make_unique<nn::Conv2d<float>>(i == 0 ? 3 : ch[i - 1], ch[i], 4, 2, 1);
        d.conv->init_normal(init_rng, 0.02);
        if (i != 0 && i != levels_ - 1)
            d.norm = std::make_unique<nn::InstanceNorm<float>>(ch[i]);
        d.act = std::make_unique<nn::LeakyReLU<float>>(0.2);
        downs_.push_back(std::move(d));
    }

    for (int j = 0; j < levels_; ++j) {
        Up u;
        const int in_ch = j == 0 ? ch[levels_ - 1] : 2 * ch[levels_ - 1 - j];
        const int out_ch = j == levels_ - 1 ? 1 : ch[levels_ - 2 - j];
        u.conv = std::make_unique<nn::ConvTranspose2d<float>>(in_ch, out_ch, 4, 2, 1);
        u.conv->init_normal(init_rng, 0.02);
        if (j != levels_ - 1) {
            u.norm = std::make_unique<nn::InstanceNorm<float>>(out_ch);
            u.act = std::make_unique<nn::ReLU<float>>();
        } else {
            u.out_act = std::make_unique<nn::Sigmoid<float>>();
        }
        if (j < 3) u.drop = std::make_unique<nn::Dropout<float>>(
                       config.dropout_probability, dropout_rng);
        ups_.push_back(std::move(u));
    }
}

Tensor<float> GanGenerator::forward(const Tensor<float>& image, bool train) {
    const int side = 1 << levels_;
    if (image.n != 1 || image.c != 3 || image.h != side || image.w != side)
        throw ValidationError("generator expects a [1,3," + std::to_string(side) + "," +
                              std::to_string(side) + "] input, got " + image.shape_string());

    enc_.assign(levels_, Tensor<float>());
    Tensor<float> x = image;
    for (int i = 0; i < levels_; ++i) {
        x = downs_[i].conv->forward(x, train);
        if (downs_[i].norm) x = downs_[i].norm->forward(x, train);
        x = downs_[i].act->forward(x, train);
        enc_[i] = x;
    }

    for (int j = 0; j < levels_; ++j) {
        Up& u = ups_[j];
        x = u.conv->forward(x, train);
        if (u.norm) x = u.norm->forward(x, train);
        if (u.act) x = u.act->forward(x, train);
        if (u.out_act) x = u.out_act->forward(x, train);
        if (u.drop) x = u.drop->forward(x, train);
        if (j != levels_ - 1) x = concat_channels(x, enc_[levels_ - 2 - j]);
    }
    return x;
}

Tensor<float> GanGenerator::backward(const Tensor<float>& doutput) {
    std::vector<Tensor<float>> enc_grad(levels_);

    Tensor<float> g = doutput;
    for (int j = levels_ - 1; j >= 0; --j) {
        Up& u = ups_[j];
        if (j != levels_ - 1) {
            Tensor<float> g_up, g_skip;
            split_channels(g, enc_[levels_ - 2 - j].c, g_up, g_skip);
            const int level = levels_ - 2 - j;
            if (enc_grad[level].size() == 0)
                enc_grad[level] = g_skip;
            else
                accumulate(enc_grad[level], g_skip);
            g = std::move(g_up);
        }
        if (u.drop) g = u.drop->backward(g);
        if (u.out_act) g = u.out_act->backward(g);
        if (u.act) g = u.act->backward(g);
        if (u.norm) g = u.norm->backward(g);
        g = u.conv->backward(g);
    }

    if (enc_grad[levels_ - 1].size() == 0)
        enc_grad[levels_ - 1] = g;
    else
        accumulate(enc_grad[levels_ - 1], g);

    for (int i = levels_ - 1; i >= 0; --i) {
        Tensor<float> gi = downs_[i].act->backward(enc_grad[i]);
        if (downs_[i].norm) gi = downs_[i].norm->backward(gi);
        gi = downs_[i].conv->backward(gi);
        if (i == 0) return gi;
        if (enc_grad[i - 1].size() == 0)
            enc_grad[i - 1] = std::move(gi);
        else
            accumulate(enc_grad[i - 1], gi);
    }
    throw std::logic_error("unreachable");
}

void GanGenerator::collect_params(const std::string& prefix, std::vector<nn::ParamRef<float>>& out) {
    for (std::size_t i = 0; i < downs_.size(); ++i) {
        const std::string base = prefix + ".down" + std::to_string(i);
        downs_[i].conv->collect_params(base + ".conv", out);
        if (downs_[i].norm) downs_[i].norm->collect_params(base + ".norm", out);
    }
    for (std::size_t j = 0; j < ups_.size(); ++j) {
        const std::string base = prefix + ".up" + std::to_string(j);
        ups_[j].conv->collect_params(base + ".conv", out);
        if (ups_[j].norm) ups_[j].norm->collect_params(base + ".norm", out);
    }
}

GanState::GanState(const GanConfig& config, unsigned seed)
    : config_(config),
      dropout_rng_(seed + 1),
      opt_g_(config.learning_rate, config.beta1, 0.999, 1e-8, 0.0),
      opt_d_(config.learning_rate, config.beta1, 0.999, 1e-8, 0.0) {
    config_.validate();
    Rng init_rng(seed);
    generator_ = std::make_unique<GanGenerator>(config_, &dropout_rng_, init_rng);

    auto conv = [&](const char* name, int in, int out, int k, int stride, bool norm) {
        auto* c = discriminator_.emplace<nn::Conv2d<float>>(name, in, out, k, stride, 1);
        c->init_normal(init_rng, 0.02);
        if (norm)
            discriminator_.emplace<nn::InstanceNorm<float>>(std::string(name) + "_norm", out);
        discriminator_.emplace<nn::LeakyReLU<float>>(std::string(name) + "_act", 0.2);
    };
    conv("c1", 4, 64, 4, 2, false);
    conv("c2", 64, 128, 4, 2, true);
    conv("c3", 128, 256, 4, 2, true);
    conv("c4", 256, 512, 3, 1, true);
    discriminator_.emplace<nn::Conv2d<float>>("c5", 512, 1, 3, 1, 1)->init_normal(init_rng, 0.02);
}

Tensor<float> GanState::discriminate(const Tensor<float>& pair, bool train) {
    const int side = config_.input_side;
    if (pair.n != 1 || pair.c != 4 || pair.h != side || pair.w != side)
        throw ValidationError("discriminator expects a [1,4," + std::to_string(side) + "," +
                              std::to_string(side) + "] input, got " + pair.shape_string());
    return discriminator_.forward(pair, train);
}

Tensor<float> GanState::discriminator_backward(const Tensor<float>& dy) {
    return discriminator_.backward(dy);
}

std::vector<nn::ParamRef<float>> GanState::generator_params() {
    std::vector<nn::ParamRef<float>> out;
    generator_->collect_params("generator", out);
    return out;
}

std::vector<nn::ParamRef<float>> GanState::discriminator_params() {
    std::vector<nn::ParamRef<float>> out;
    discriminator_.collect_params("discriminator", out);
    return out;
}

GanTracePoint GanState::advance(GanTracePoint point) {
    point.iteration = ++iteration_;
    trace_.push_back(point);
    return point;
}

std::unique_ptr<GanState> build_gan(const GanConfig& config, unsigned seed) {
    config.validate();
    return std::make_unique<GanState>(config, seed);
}

GanTracePoint gan_step(GanState& state, const std::vector<GanPair>& batch) {
    if (batch.empty()) throw ValidationError("gan_step requires a non-empty batch");
    const int side = state.config().input_side;
    for (const auto& p : batch) {
        if (p.image.n != 1 || p.image.c != 3 || p.image.h != side || p.image.w != side)
            throw ValidationError("batch image must be [1,3," + std::to_string(side) + "," +
                                  std::to_string(side) + "], got " + p.image.shape_string());
        if (p.mask.n != 1 || p.mask.c != 1 || p.mask.h != side || p.mask.w != side)
            throw ValidationError("batch mask must be [1,1," + std::to_string(side) + "," +
                                  std::to_string(side) + "], got " + p.mask.shape_string());
    }

    const float inv_batch = 1.0f / static_cast<float>(batch.size());
    GanTracePoint point;

    // Discriminator update: real pairs toward 1, generated pairs toward 0.
    auto d_params = state.discriminator_params();
    nn::zero_grads(d_params);
    for (const auto& pair : batch) {
        const Tensor<float> fake = state.generator().forward(pair.image, true);

        const Tensor<float> real_scores =
            state.discriminate(concat_channels(pair.image, pair.mask), true);
        auto real_loss = nn::bce_with_logits(real_scores, 1.0f);
        point.discriminator_real += real_loss.loss * inv_batch;
        scale(real_loss.grad, 0.5f * inv_batch);
        state.discriminator_backward(real_loss.grad);

        const Tensor<float> fake_scores =
            state.discriminate(concat_channels(pair.image, fake), true);
        auto fake_loss = nn::bce_with_logits(fake_scores, 0.0f);
        point.discriminator_fake += fake_loss.loss * inv_batch;
        scale(fake_loss.grad, 0.5f * inv_batch);
        state.discriminator_backward(fake_loss.grad);
    }
    state.discriminator_opt().step(d_params);

    // Generator update: fool the updated discriminator plus L1 reconstruction.
    auto g_params = state.generator_params();
    nn::zero_grads(g_params);
    for (const auto& pair : batch) {
        const Tensor<float> fake = state.generator().forward(pair.image, true);

        Tensor<float> d_fake(1, 1, 0, 0);
        if (state.config().adversarial_weight > 0) {
            const Tensor<float> scores = state.discriminate(concat_channels(pair.image, fake), true);
            auto adv = nn::bce_with_logits(scores, 1.0f);
            point.generator_adversarial += adv.loss * inv_batch;
            scale(adv.grad, static_cast<float>(state.config().adversarial_weight) * inv_batch);
            const Tensor<float> d_pair = state.discriminator_backward(adv.grad);
            Tensor<float> d_image;
            split_channels(d_pair, 3, d_image, d_fake);
        }

        auto rec = nn::l1_loss(fake, pair.mask);
        point.reconstruction += rec.loss * inv_batch;
        scale(rec.grad, static_cast<float>(state.config().reconstruction_weight) * inv_batch);

        if (d_fake.size() == 0)
            d_fake = std::move(rec.grad);
        else
            accumulate(d_fake, rec.grad);
        state.generator().backward(d_fake);
    }
    state.generator_opt().step(g_params);

    point = state.advance(point);
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(point.generator_adversarial) || !finite(point.reconstruction) ||
        !finite(point.discriminator_real) || !finite(point.discriminator_fake)) {
        std::ostringstream msg;
        msg << "training diverged at iteration " << state.iteration()
            << ": generator_adversarial=" << point.generator_adversarial
            << " reconstruction=" << point.reconstruction
            << " discriminator_real=" << point.discriminator_real
            << " discriminator_fake=" << point.discriminator_fake;
        throw TrainingDivergedError(msg.str());
    }
    return point;
}

Image resize_image_for_gan(const Image& image, int side, ResizeRecord* record) {
    if (side < 1) throw ValidationError("resize target must be positive");
    if (record) *record = {image.width, image.height};
    return resize_bilinear(image, side, side);
}

BinaryMask resize_mask_for_gan(const BinaryMask& mask, int side, ResizeRecord* record) {
    if (side < 1) throw ValidationError("resize target must be positive");
    if (mask.width < 1 || mask.height < 1) throw ValidationError("zero-area mask");
    if (record) *record = {mask.width, mask.height};

    Image carrier(mask.width, mask.height, 1);
    std::copy(mask.labels.begin(), mask.labels.end(), carrier.data.begin());
    const Image resized = resize_nearest(carrier, side, side);
    BinaryMask out(side, side);
    std::copy(resized.data.begin(), resized.data.end(), out.labels.begin());
    return out;
}

BinaryMask restore_mask(const BinaryMask& mask, const ResizeRecord& record) {
    if (record.original_width < 1 || record.original_height < 1)
        throw ValidationError("resize record has zero area");
    Image carrier(mask.width, mask.height, 1);
    std::copy(mask.labels.begin(), mask.labels.end(), carrier.data.begin());
    const Image resized = resize_nearest(carrier, record.original_width, record.original_height);
    BinaryMask out(record.original_width, record.original_height);
    std::copy(resized.data.begin(), resized.data.end(), out.labels.begin());
    return out;
}

BinaryMask predict_gan(GanState& state, const Image& image) {
    ResizeRecord record;
    const Image resized = resize_image_for_gan(image, state.config().input_side, &record);
    const Tensor<float> scores = state.generator().forward(nn::image_to_input(resized), false);
    return restore_mask(nn::unit_to_mask(scores, 0.5f), record);
}

void save_gan(GanState& state, const std::string& path) {
    auto params = state.generator_params();
    auto d = state.discriminator_params();
    params.insert(params.end(), d.begin(), d.end());
    nlohmann::json meta{{"format", "gan-checkpoint"},
                        {"version", 1},
                        {"iteration", state.iteration()},
                        {"config", config_to_json(state.config())}};
    nn::save_checkpoint(path, meta, params);
}

std::unique_ptr<GanState> load_gan(const std::string& path) {
    const auto meta = nn::read_checkpoint_meta(path);
    if (!meta.contains("format") || meta["format"] != "gan-checkpoint")
        throw ConfigError("not an adversarial-model checkpoint: " + path);
    auto state = build_gan(config_from_json(meta.at("config")));
    auto params = state->generator_params();
    auto d = state->discriminator_params();
    params.insert(params.end(), d.begin(), d.end());
    nn::load_checkpoint(path, params);
    state->restore_iteration(meta.value("iteration", 0));
    return state;
}

void write_gan_trace(const std::vector<GanTracePoint>& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write trace file: " + path);
    out.precision(17);
    for (const auto& p : trace)
        out << p.iteration << ' ' << p.generator_adversarial << ' ' << p.reconstruction << ' '
            << p.discriminator_real << ' ' << p.discriminator_fake << '\n';
    if (!out) throw IoError("failed writing trace file: " + path);
}

std::vector<GanTracePoint> read_gan_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace file: " + path);
    std::vector<GanTracePoint> trace;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream s(line);
        GanTracePoint p;
        if (!(s >> p.iteration >> p.generator_adversarial >> p.reconstruction >>
              p.discriminator_real >> p.discriminator_fake))
            throw ParseError("trace line " + std::to_string(line_no) + " is malformed: " + line);
        trace.push_back(p);
    }
    return trace;
}

}  // namespace iris::ganseg
