#pragma once

#include "iris/image.hpp"
#include "iris/mask.hpp"
#include "iris/nn/tensor.hpp"

namespace iris::nn {

/// 8-bit image -> [1,3,H,W] float tensor scaled to [-1,1]. Grayscale inputs
/// are replicated across the three channels.
Tensor<float> image_to_input(const Image& img);

/// Binary mask -> [1,1,H,W] float tensor with values in {0,1}.
Tensor<float> mask_to_unit(const BinaryMask& mask);

/// [1,1,H,W] tensor of scores -> mask via `score >= threshold`.
BinaryMask unit_to_mask(const Tensor<float>& t, float threshold);

}  // namespace iris::nn
