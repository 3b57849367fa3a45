#pragma once

#include <memory>
#include <string>
#include <vector>

#include "iris/image.hpp"
#include "iris/mask.hpp"
#include "iris/nn/adam.hpp"
#include "iris/nn/layers.hpp"
#include "iris/rng.hpp"

namespace iris::ganseg {

struct GanConfig {
    int input_side = 256;
    double adversarial_weight = 1.0;
    double reconstruction_weight = 100.0;
    double learning_rate = 2e-4;
    double beta1 = 0.5;
    double dropout_probability = 0.5;
    int iterations = 32000;

    /// Throws ConfigError when a field is out of range (the side must be a
    /// power of two, at least 64).
    void validate() const;
};

/// U-shaped encoder-decoder generator: stride-2 4x4 convolutions down to a
/// 1x1 bottleneck, mirrored transposed convolutions with channel-concatenated
/// skips back up, sigmoid output. Dropout in the three innermost decoder
/// blocks supplies training-time stochasticity and is disabled at inference.
class GanGenerator {
public:
    GanGenerator(const GanConfig& config, Rng* dropout_rng, Rng& init_rng);

    nn::Tensor<float> forward(const nn::Tensor<float>& image, bool train);
    nn::Tensor<float> backward(const nn::Tensor<float>& doutput);
    void collect_params(const std::string& prefix, std::vector<nn::ParamRef<float>>& out);

private:
    struct Down {
        std::unique_ptr<nn::Conv2d<float>> conv;
        std::unique_ptr<nn::InstanceNorm<float>> norm;  // absent on first/innermost
        std::unique_ptr<nn::LeakyReLU<float>> act;
    };
    struct Up {
        std::unique_ptr<nn::ConvTranspose2d<float>> conv;
        std::unique_ptr<nn::InstanceNorm<float>> norm;  // absent on the output block
        std::unique_ptr<nn::ReLU<float>> act;           // output block uses sigmoid
        std::unique_ptr<nn::Sigmoid<float>> out_act;
        std::unique_ptr<nn::Dropout<float>> drop;  // three innermost blocks
    };

    int levels_ = 0;
    std::vector<Down> downs_;
    std::vector<Up> ups_;
    std::vector<nn::Tensor<float>> enc_;  // cached encoder outputs for skips
};

struct GanTracePoint {
    int iteration = 0;
    double generator_adversarial = 0.0;
    double reconstruction = 0.0;
    double discriminator_real = 0.0;
    double discriminator_fake = 0.0;
};

/// Generator + patch discriminator + both optimizers + the loss history.
class GanState {
public:
    GanState(const GanConfig& config, unsigned seed);

    const GanConfig& config() const { return config_; }
    int iteration() const { return iteration_; }
    const std::vector<GanTracePoint>& trace() const { return trace_; }

    GanGenerator& generator() { return *generator_; }

    /// Patch scores for a [1,4,S,S] image+mask concatenation; the grid side
    /// is exactly S/8.
    nn::Tensor<float> discriminate(const nn::Tensor<float>& pair, bool train);
    nn::Tensor<float> discriminator_backward(const nn::Tensor<float>& dy);

    std::vector<nn::ParamRef<float>> generator_params();
    std::vector<nn::ParamRef<float>> discriminator_params();
    nn::Adam<float>& generator_opt() { return opt_g_; }
    nn::Adam<float>& discriminator_opt() { return opt_d_; }

    /// Stamps the next iteration number on the point, records it, and
    /// returns it.
    GanTracePoint advance(GanTracePoint point);

    /// Restores the iteration counter when loading a checkpoint.
    void restore_iteration(int iteration) { iteration_ = iteration; }

private:
    GanConfig config_;
    Rng dropout_rng_;
    std::unique_ptr<GanGenerator> generator_;
    nn::Sequential<float> discriminator_;
    nn::Adam<float> opt_g_;
    nn::Adam<float> opt_d_;
    int iteration_ = 0;
    std::vector<GanTracePoint> trace_;
};

std::unique_ptr<GanState> build_gan(const GanConfig& config, unsigned seed = 0);

/// One training sample at the operating resolution.
struct GanPair {
    nn::Tensor<float> image;  // [1,3,S,S]
    nn::Tensor<float> mask;   // [1,1,S,S], values in {0,1}
};

/// One discriminator update (real pairs vs generated pairs) followed by one
/// generator update (adversarial + reconstruction_weight * L1), gradients
/// averaged over the batch. Records a trace point; a non-finite loss raises
/// TrainingDivergedError carrying the iteration and loss snapshot.
GanTracePoint gan_step(GanState& state, const std::vector<GanPair>& batch);

/// Original dimensions needed to undo a resize.
struct ResizeRecord {
    int original_width = 0;
    int original_height = 0;
};

/// Bilinear resize to side x side. Throws ValidationError on zero-area input.
Image resize_image_for_gan(const Image& image, int side, ResizeRecord* record = nullptr);

/// Nearest-neighbor resize to side x side, preserving {0,1} labels.
BinaryMask resize_mask_for_gan(const BinaryMask& mask, int side, ResizeRecord* record = nullptr);

/// Nearest-neighbor resize back to the recorded dimensions.
BinaryMask restore_mask(const BinaryMask& mask, const ResizeRecord& record);

/// Resize, run the generator without dropout, threshold scores at 0.5, and
/// resize the mask back to the input dimensions.
BinaryMask predict_gan(GanState& state, const Image& image);

void save_gan(GanState& state, const std::string& path);
std::unique_ptr<GanState> load_gan(const std::string& path);

/// Line-delimited trace: iteration, generator adversarial, reconstruction,
/// discriminator real, discriminator fake.
void write_gan_trace(const std::vector<GanTracePoint>& trace, const std::string& path);
std::vector<GanTracePoint> read_gan_trace(const std::string& path);

}  // namespace iris::ganseg
