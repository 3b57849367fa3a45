#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "iris/corpus/manifest.hpp"
#include "iris/image.hpp"
#include "iris/nn/layers.hpp"
#include "iris/roi/geometry.hpp"
#include "iris/rng.hpp"

namespace iris::roi {

/// Five (width, height) box priors in grid-cell units.
using AnchorSet = std::vector<std::pair<double, double>>;

struct DetectorConfig {
    int input_channels = 1;  // 1 or 3
    double learning_rate = 1e-3;
    int iterations = 500;
    double lambda_coord = 5.0;
    double lambda_noobj = 0.5;
    double ignore_iou = 0.6;
    AnchorSet anchors;  // empty: computed from the training boxes

    void validate() const;
};

struct LayerShape {
    std::string name;
    int channels = 0;
    int height = 0;
    int width = 0;
};

/// Compact single-class detector: nine 3x3/1x1 convolutions interleaved with
/// six max pools (the last at stride 1), mapping 416x416 inputs to a
/// 13x13x30 grid of 5 anchors x (x, y, w, h, objectness, class).
class Detector {
public:
    static constexpr int input_side = 416;
    static constexpr int grid_side = 13;
    static constexpr int num_anchors = 5;

    Detector(int input_channels, unsigned seed);

    nn::Tensor<float> forward(const nn::Tensor<float>& x, bool train);
    nn::Tensor<float> backward(const nn::Tensor<float>& dy);
    std::vector<nn::ParamRef<float>> params();
    int input_channels() const { return channels_; }

    /// Expected output shape of every convolution and pooling stage for the
    /// given input side, in network order.
    static std::vector<LayerShape> layer_shapes(int side = input_side);

private:
    int channels_;
    Rng init_rng_;
    nn::Sequential<float> net_;
};

/// Throws ConfigError unless input_channels is 1 or 3.
std::unique_ptr<Detector> build_detector(int input_channels, unsigned seed = 0);

/// Ground-truth box in normalized [0,1] image coordinates (center + size).
struct GtBox {
    double cx = 0, cy = 0, w = 0, h = 0;
};

/// k-means with distance 1 - IoU over box shapes (widths and heights in grid
/// units), deterministic: centers seeded from the area-sorted boxes at evenly
/// spaced ranks; an emptied cluster keeps its previous center.
AnchorSet kmeans_anchors(const std::vector<std::pair<double, double>>& box_sizes, int k = 5,
                         int iterations = 100);

struct YoloLoss {
    double total = 0.0;
    double coord = 0.0;
    double objectness = 0.0;
    double no_object = 0.0;
    double classification = 0.0;
};

/// Squared-error detection loss over the 13x13x(5x6) head: coordinate terms
/// (weighted lambda_coord) and objectness/class terms at each ground truth's
/// responsible cell and anchor, plus lambda_noobj objectness suppression at
/// anchors whose decoded box overlaps every truth below ignore_iou. The
/// gradient (same shape as the head) is written into grad.
template <typename T>
YoloLoss yolo_loss(const nn::Tensor<T>& head, const std::vector<GtBox>& truth,
                   const AnchorSet& anchors, const DetectorConfig& config, nn::Tensor<T>& grad);

/// All 845 decoded boxes in original-image pixel coordinates with
/// conf = sigmoid(objectness) * sigmoid(class).
std::vector<Detection> decode_detections(const nn::Tensor<float>& head, const AnchorSet& anchors,
                                         int image_width, int image_height);

/// Resizes the image to the detector input, runs inference, and returns the
/// decoded detections mapped back to the original dimensions.
std::vector<Detection> predict_detections(Detector& model, const AnchorSet& anchors,
                                          const Image& image);

struct DetectorTrainResult {
    AnchorSet anchors;
    std::vector<std::pair<int, double>> trace;  // (iteration, loss)
};

struct DetectorTrainOptions {
    std::string checkpoint_path;
    int checkpoint_every = 0;
    int trace_every = 10;
    unsigned seed = 0;
};

/// Adam over squared-error detection loss, batch size 1, epoch-shuffled.
/// Ground-truth boxes come from the manifest annotation when present, else
/// from the tight bounding box of the sample's mask; samples with neither are
/// rejected in one ValidationError listing their ids.
DetectorTrainResult train_detector(Detector& model,
                                   const std::vector<corpus::ImageSample>& samples,
                                   const DetectorConfig& config,
                                   const DetectorTrainOptions& options = {});

struct LoadedDetector {
    std::unique_ptr<Detector> model;
    AnchorSet anchors;
    DetectorConfig config;
};

void save_detector(Detector& model, const AnchorSet& anchors, const DetectorConfig& config,
                   int iteration, const std::string& path);
LoadedDetector load_detector(const std::string& path);

}  // namespace iris::roi
