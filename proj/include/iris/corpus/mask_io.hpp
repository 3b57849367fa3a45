#pragma once

#include <string>

#include "iris/mask.hpp"

namespace iris::corpus {

/// Loads a mask image and binarizes it: intensity >= 128 maps to 1, else 0.
/// Multi-channel files are accepted only when all channels agree per pixel.
BinaryMask load_mask(const std::string& path);

/// Writes a single-channel image, label 1 -> 255 and 0 -> 0, so that
/// load_mask(save_mask(m)) == m.
void save_mask(const BinaryMask& mask, const std::string& path);

}  // namespace iris::corpus
