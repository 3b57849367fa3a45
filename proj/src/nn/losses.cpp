#include "iris/nn/losses.hpp"

#include <cmath>

namespace iris::nn {

template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, const Tensor<std::uint8_t>& labels) {
    if (logits.c != 2)
        throw ValidationError("softmax_cross_entropy: expected 2 logit channels, got " +
                              logits.shape_string());
    if (labels.n != logits.n || labels.c != 1 || labels.h != logits.h || labels.w != logits.w)
        throw ValidationError("softmax_cross_entropy: labels " + labels.shape_string() +
                              " do not match logits " + logits.shape_string());

    LossResult<T> result;
    result.grad = Tensor<T>(logits.n, 2, logits.h, logits.w);
    const std::size_t plane = static_cast<std::size_t>(logits.h) * logits.w;
    const double scale = 1.0 / (static_cast<double>(logits.n) * plane);
    double total = 0.0;
    for (int n = 0; n < logits.n; ++n) {
        const T* l0 = logits.sample(n);
        const T* l1 = l0 + plane;
        const std::uint8_t* y = labels.sample(n);
        T* g0 = result.grad.sample(n);
        T* g1 = g0 + plane;
        for (std::size_t i = 0; i < plane; ++i) {
            const double a = l0[i], b = l1[i];
            const double m = a > b ? a : b;
            const double e0 = std::exp(a - m), e1 = std::exp(b - m);
            const double z = e0 + e1;
            const double p0 = e0 / z, p1 = e1 / z;
            const int label = y[i] ? 1 : 0;
            total -= std::log(label ? p1 : p0);
            g0[i] = static_cast<T>((p0 - (label == 0 ? 1.0 : 0.0)) * scale);
            g1[i] = static_cast<T>((p1 - (label == 1 ? 1.0 : 0.0)) * scale);
        }
    }
    result.loss = total * scale;
    return result;
}

template <typename T>
LossResult<T> bce_with_logits(const Tensor<T>& logits, const Tensor<T>& targets) {
    require_same_shape(logits, targets, "bce_with_logits");
    LossResult<T> result;
    result.grad = Tensor<T>(logits.n, logits.c, logits.h, logits.w);
    const double scale = 1.0 / static_cast<double>(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.data.size(); ++i) {
        const double x = logits.data[i];
        const double t = targets.data[i];
        total += std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::fabs(x)));
        const double sig = 1.0 / (1.0 + std::exp(-x));
        result.grad.data[i] = static_cast<T>((sig - t) * scale);
    }
    result.loss = total * scale;
    return result;
}

template <typename T>
LossResult<T> bce_with_logits(const Tensor<T>& logits, T target) {
    Tensor<T> targets(logits.n, logits.c, logits.h, logits.w, target);
    return bce_with_logits(logits, targets);
}

template <typename T>
LossResult<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target) {
    require_same_shape(pred, target, "l1_loss");
    LossResult<T> result;
    result.grad = Tensor<T>(pred.n, pred.c, pred.h, pred.w);
    const double scale = 1.0 / static_cast<double>(pred.size());
    double total = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = static_cast<double>(pred.data[i]) - target.data[i];
        total += std::fabs(d);
        result.grad.data[i] = static_cast<T>((d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) * scale);
    }
    result.loss = total * scale;
    return result;
}

Tensor<std::uint8_t> mask_to_labels(const BinaryMask& mask) {
    Tensor<std::uint8_t> labels(1, 1, mask.height, mask.width);
    labels.data = mask.labels;
    return labels;
}

BinaryMask logits_to_mask(const Tensor<float>& logits) {
    if (logits.n != 1 || logits.c != 2)
        throw ValidationError("logits_to_mask: expected [1,2,H,W], got " + logits.shape_string());
    BinaryMask mask(logits.w, logits.h);
    const std::size_t plane = static_cast<std::size_t>(logits.h) * logits.w;
    const float* l0 = logits.data.data();
    const float* l1 = l0 + plane;
    for (std::size_t i = 0; i < plane; ++i) mask.labels[i] = l1[i] > l0[i] ? 1 : 0;
    return mask;
}

template LossResult<float> softmax_cross_entropy(const Tensor<float>&,
                                                 const Tensor<std::uint8_t>&);
template LossResult<double> softmax_cross_entropy(const Tensor<double>&,
                                                  const Tensor<std::uint8_t>&);
template LossResult<float> bce_with_logits(const Tensor<float>&, const Tensor<float>&);
template LossResult<double> bce_with_logits(const Tensor<double>&, const Tensor<double>&);
template LossResult<float> bce_with_logits(const Tensor<float>&, float);
template LossResult<double> bce_with_logits(const Tensor<double>&, double);
template LossResult<float> l1_loss(const Tensor<float>&, const Tensor<float>&);
template LossResult<double> l1_loss(const Tensor<double>&, const Tensor<double>&);

}  // namespace iris::nn
