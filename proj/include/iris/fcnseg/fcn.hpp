#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "iris/corpus/manifest.hpp"
#include "iris/image.hpp"
#include "iris/mask.hpp"
#include "iris/nn/layers.hpp"
#include "iris/nn/losses.hpp"
#include "iris/rng.hpp"

namespace iris::fcnseg {

struct FcnConfig {
    double learning_rate = 1e-5;
    double dropout_probability = 0.5;
    double weight_decay = 5e-4;
    double skip_init_std = 1e-4;
    int iterations = 32000;
    int batch_size = 1;
    int num_classes = 2;

    /// Throws ConfigError when a field is out of range.
    void validate() const;
};

/// Fully convolutional segmentation network: VGG-16-style 13-convolution
/// encoder with five pooling stages, a 1x1-convolutionalized two-layer head,
/// and three transposed-convolution upsamplers (x2, x2, x8) fused with
/// projected skip connections from pooling stages 3 and 4.
///
/// Accepts [1,3,H,W] inputs with H and W divisible by 32 and produces
/// [1,2,H,W] logits.
class FcnModel {
public:
    FcnModel(const FcnConfig& config, unsigned init_seed);

    nn::Tensor<float> forward(const nn::Tensor<float>& input, bool train);
    nn::Tensor<float> backward(const nn::Tensor<float>& dlogits);

    std::vector<nn::ParamRef<float>> params();

    /// Loads weights from a checkpoint. With require_complete the file must
    /// cover every parameter; otherwise any matching subset (for example an
    /// encoder-only artifact) is accepted. Unknown tensor names and shape
    /// mismatches raise ConfigError naming the tensor.
    void load_weights(const std::string& path, bool require_complete);

    const FcnConfig& config() const { return config_; }

private:
    FcnConfig config_;
    Rng init_rng_;
    Rng dropout_rng_;

    nn::Sequential<float> to_pool3_;
    nn::Sequential<float> to_pool4_;
    nn::Sequential<float> to_pool5_;
    nn::Sequential<float> head_;
    nn::ConvTranspose2d<float> upscore2_;
    nn::Conv2d<float> score_pool4_;
    nn::ConvTranspose2d<float> upscore4_;
    nn::Conv2d<float> score_pool3_;
    nn::ConvTranspose2d<float> upscore8_;
};

/// Builds the model, optionally initializing the encoder (or any parameter
/// subset) from a weights artifact. Without one, convolutions use
/// fan-in-scaled gaussian init, upsamplers start as bilinear interpolation,
/// and the skip projections use zero-mean gaussians with config.skip_init_std.
std::unique_ptr<FcnModel> build_fcn(const FcnConfig& config, const std::string& pretrained = "",
                                    unsigned init_seed = 0);

/// Mean two-class softmax cross-entropy of logits [1,2,H,W] against a mask
/// of the same spatial size. The gradient in the result is with respect to
/// the logits.
nn::LossResult<float> fcn_loss(const nn::Tensor<float>& logits, const BinaryMask& target);

struct TracePoint {
    int iteration = 0;
    double loss = 0.0;
};

struct FcnTrainOptions {
    std::string checkpoint_path;  // empty disables checkpointing
    int checkpoint_every = 0;     // additionally checkpoint every K steps when > 0
    int trace_every = 10;
    unsigned seed = 0;
    std::function<void(const TracePoint&)> on_trace;
};

/// Runs exactly config.iterations Adam steps over the samples (batch size 1,
/// epoch-shuffled order), recording the loss every trace_every steps and at
/// the last step. Every sample must carry a mask. Checkpoints are written to
/// checkpoint_path on the checkpoint_every schedule and at the end.
std::vector<TracePoint> train_fcn(FcnModel& model, const std::vector<corpus::ImageSample>& samples,
                                  const FcnConfig& config, const FcnTrainOptions& options = {});

/// Per-pixel argmax segmentation. The image must have dimensions divisible
/// by 32 (the pipeline pads when they are not).
BinaryMask predict_fcn(FcnModel& model, const Image& image);

/// Writes (iteration, loss) lines; the reverse of read_trace.
void write_trace(const std::vector<TracePoint>& trace, const std::string& path);
std::vector<TracePoint> read_trace(const std::string& path);

}  // namespace iris::fcnseg
