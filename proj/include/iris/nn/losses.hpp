#pragma once

#include "iris/mask.hpp"
#include "iris/nn/tensor.hpp"

namespace iris::nn {

/// Loss value plus the gradient with respect to the first argument. Losses
/// average over every contributing element, and the gradient includes that
/// averaging.
template <typename T>
struct LossResult {
    double loss = 0.0;
    Tensor<T> grad;
};

/// Mean 2-class softmax cross-entropy over pixels. logits: [N,2,H,W];
/// labels: [N,1,H,W] with values in {0,1}.
template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, const Tensor<std::uint8_t>& labels);

/// Mean binary cross-entropy on logits against targets in [0,1], computed in
/// the numerically stable max(x,0) - x t + log(1 + exp(-|x|)) form.
template <typename T>
LossResult<T> bce_with_logits(const Tensor<T>& logits, const Tensor<T>& targets);

/// Same, against a constant target for every element.
template <typename T>
LossResult<T> bce_with_logits(const Tensor<T>& logits, T target);

/// Mean absolute error.
template <typename T>
LossResult<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target);

/// [N,1,H,W] tensor of {0,1} labels from a mask (N = 1).
Tensor<std::uint8_t> mask_to_labels(const BinaryMask& mask);

/// Per-pixel argmax over the two logit channels.
BinaryMask logits_to_mask(const Tensor<float>& logits);

}  // namespace iris::nn
