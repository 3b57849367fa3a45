#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "iris/nn/tensor.hpp"
#include "iris/rng.hpp"

namespace iris::nn {

/// Named view of one parameter tensor and its gradient. `decay` marks
/// parameters subject to L2 weight decay (weights yes, biases and
/// normalization affines no).
template <typename T>
struct ParamRef {
    std::string name;
    std::vector<T>* value;
    std::vector<T>* grad;
    std::vector<int> shape;
    bool decay = false;
};

template <typename T>
void zero_grads(std::vector<ParamRef<T>>& params);

template <typename T>
class Layer {
public:
    virtual ~Layer() = default;

    /// Computes the layer output and caches whatever backward() needs.
    virtual Tensor<T> forward(const Tensor<T>& x, bool train) = 0;

    /// Propagates the output gradient to the input gradient, accumulating
    /// parameter gradients. Must follow a forward() call.
    virtual Tensor<T> backward(const Tensor<T>& dy) = 0;

    virtual void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {}
};

template <typename T>
class Conv2d : public Layer<T> {
public:
    Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad, bool bias = true);

    Tensor<T> forward(const Tensor<T>& x, bool train) override;
    Tensor<T> backward(const Tensor<T>& dy) override;
    void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) override;

    /// Gaussian fill with std sqrt(2 / fan_in); biases zero.
    void init_he(Rng& rng);
    void init_normal(Rng& rng, double stddev);

    int in_channels() const { return in_c_; }
    int out_channels() const { return out_c_; }

    std::vector<T> weight;  // [out, in, k, k]
    std::vector<T> bias;    // [out]
    std::vector<T> dweight;
    std::vector<T> dbias;

private:
    int in_c_, out_c_, k_, stride_, pad_;
    bool has_bias_;
    Tensor<T> x_;
};

template <typename T>
class ConvTranspose2d : public Layer<T> {
public:
    ConvTranspose2d(int in_channels, int out_channels, int kernel, int stride, int pad,
                    bool bias = true);

    Tensor<T> forward(const Tensor<T>& x, bool train) override;
    Tensor<T> backward(const Tensor<T>& dy) override;
    void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) override;

    void init_he(Rng& rng);
    void init_normal(Rng& rng, double stddev);
    /// Bilinear-interpolation kernel on the channel diagonal (requires
    /// in_channels == out_channels); the usual upsampler initialization.
    void init_bilinear();

    std::vector<T> weight;  // [in, out, k, k]
    std::vector<T> bias;    // [out]
    std::vector<T> dweight;
    std::vector<T> dbias;

private:
    int in_c_, out_c_, k_, stride_, pad_;
    bool has_bias_;
    Tensor<T> x_;
};

/// Max pooling with optional extra padding on the right/bottom edges only
/// (padded cells never win the max). Covers both the halving pools and the
/// stride-1 "same" pool.
template <typename T>
class MaxPool2d : public Layer<T> {
public:
    MaxPool2d(int kernel, int stride, int pad_right = 0, int pad_bottom = 0);

    Tensor<T> forward(const Tensor<T>& x, bool train) override;
    Tensor<T> backward(const Tensor<T>& dy) override;

private:
    int k_, stride_, pad_r_, pad_b_;
    int in_h_ = 0, in_w_ = 0, in_n_ = 0, in_c_ = 0;
    std::vector<int> argmax_;  // input plane offset per output element
};

template <typename T>
class ReLU : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& x, bool train) override;
    Tensor<T> backward(const Tensor<T>& dy) override;

private:
    Tensor<T> y_;
};

template <typename T>
class LeakyReLU : public Layer<T> {
public:
    explicit LeakyReLU(double negative_slope) : alpha_(static_cast<T>(negative_slope)) {}
    Tensor<T> forward(const Tensor<T>& x, bool train) override;
    Tensor<T> backward(const Tensor<T>& dy) override;

private:
    T alpha_;
    Tensor<T> y_;
};

template <typename T>
class Sigmoid : public Layer<T> {
public:
    Tensor<T> forward(const Tensor<T>& x, bool train) override;
    Tensor<T> backward(const Tensor<T>& dy) override;

private:
    Tensor<T> y_;
};

/// Inverted dropout driven by an external Rng; identity when train is false.
template <typename T>
class Dropout : public Layer<T> {
public:
    Dropout(double probability, Rng* rng);
    Tensor<T> forward(const Tensor<T>& x, bool train) override;
    Tensor<T> backward(const Tensor<T>& dy) override;

private:
    double p_;
    Rng* rng_;
    bool active_ = false;
    std::vector<T> mask_;
};

/// Per-sample, per-channel normalization over the spatial extent, with a
/// learned affine. Identical in training and inference, which keeps
/// single-image training deterministic at test time.
template <typename T>
class InstanceNorm : public Layer<T> {
public:
    explicit InstanceNorm(int channels, double eps = 1e-5);

    Tensor<T> forward(const Tensor<T>& x, bool train) override;
    Tensor<T> backward(const Tensor<T>& dy) override;
    void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) override;

    std::vector<T> gamma;
    std::vector<T> beta;
    std::vector<T> dgamma;
    std::vector<T> dbeta;

private:
    int channels_;
    T eps_;
    Tensor<T> xhat_;
    std::vector<T> inv_std_;  // one per (n, c)
};

/// Ordered chain of named layers.
template <typename T>
class Sequential : public Layer<T> {
public:
    template <typename L, typename... Args>
    L* emplace(const std::string& name, Args&&... args) {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L* raw = layer.get();
        layers_.emplace_back(name, std::move(layer));
        return raw;
    }

    Tensor<T> forward(const Tensor<T>& x, bool train) override;
    Tensor<T> backward(const Tensor<T>& dy) override;
    void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) override;

private:
    std::vector<std::pair<std::string, std::unique_ptr<Layer<T>>>> layers_;
};

}  // namespace iris::nn
