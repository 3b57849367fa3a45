#pragma once

#include <optional>
#include <vector>

#include "iris/image.hpp"
#include "iris/mask.hpp"

namespace iris::roi {

/// Axis-aligned box in original-image pixels, max-exclusive.
struct Detection {
    double x_min = 0, y_min = 0, x_max = 0, y_max = 0;
    double confidence = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
};

/// The crop window derived from a detection (or the whole image on fallback).
/// When not a fallback and not waived, the crop is square with a
/// power-of-two side.
struct RoiBox {
    int x_min = 0, y_min = 0, x_max = 0, y_max = 0;  // max-exclusive
    int side = 0;
    bool is_fallback = false;
    // Set when the power-of-two square exceeded an image dimension and the
    // crop was clamped to the image on that axis.
    bool square_waived_x = false;
    bool square_waived_y = false;

    int width() const { return x_max - x_min; }
    int height() const { return y_max - y_min; }
};

/// Drops detections below `threshold`, then picks the highest-confidence
/// survivor (ties: earliest in the list) with its box clamped to the image.
/// Empty result means fallback to the full image.
std::optional<Detection> select_detection(const std::vector<Detection>& detections,
                                          int image_width, int image_height,
                                          double threshold = 0.25);

RoiBox full_image_roi(int image_width, int image_height);

/// Grows the box by pad_fraction of its width/height on each side, enlarges
/// to the smallest power-of-two square not smaller than the padded box,
/// centers the square on the padded box and translates it to stay inside the
/// image. If the square exceeds an image dimension, the crop is clamped to
/// the image on that axis and the waiver flag is set.
/// Throws ValidationError for a degenerate box.
RoiBox pad_and_square(const Detection& box, int image_width, int image_height,
                      double pad_fraction = 0.10);

/// Pixel offset + size needed to paste a cropped mask back at full resolution.
struct CropTransform {
    int x0 = 0, y0 = 0;
    int crop_width = 0, crop_height = 0;
    int full_width = 0, full_height = 0;
};

Image crop_image(const Image& image, const RoiBox& roi);
BinaryMask crop_mask(const BinaryMask& mask, const RoiBox& roi);
CropTransform crop_transform(const RoiBox& roi, int image_width, int image_height);

/// Pastes a crop-sized mask into a zero full-resolution mask.
BinaryMask paste_mask(const BinaryMask& cropped, const CropTransform& t);

/// Smallest power of two >= v (v >= 1).
int next_power_of_two(int v);

/// Tight bounding box of the mask's 1-pixels (max-exclusive), or empty when
/// the mask has none.
std::optional<Detection> mask_bounding_box(const BinaryMask& mask);

}  // namespace iris::roi
