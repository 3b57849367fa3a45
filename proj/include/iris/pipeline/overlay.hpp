#pragma once

#include "iris/image.hpp"
#include "iris/mask.hpp"

namespace iris::pipeline {

/// RGB copy of the image with false positives painted green and false
/// negatives painted red; correctly classified pixels are untouched. The
/// painted sets coincide exactly with the FP/FN tallies of the confusion
/// counts, so pred == truth returns the (RGB) input unchanged.
/// Throws ValidationError when the dimensions disagree.
Image render_overlay(const Image& image, const BinaryMask& pred, const BinaryMask& truth);

}  // namespace iris::pipeline
