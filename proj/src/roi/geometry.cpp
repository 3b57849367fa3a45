#include "iris/roi/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "iris/error.hpp"

namespace iris::roi {

int next_power_of_two(int v) {
    if (v < 1) throw ValidationError("next_power_of_two: value must be >= 1");
    int p = 1;
    while (p < v) p *= 2;
    return p;
}

std::optional<Detection> select_detection(const std::vector<Detection>& detections,
                                          int image_width, int image_height, double threshold) {
    const Detection* best = nullptr;
    for (const auto& d : detections) {
        if (d.confidence < threshold) continue;
        if (!best || d.confidence > best->confidence) best = &d;
    }
    if (!best) return std::nullopt;
    Detection clamped = *best;
    clamped.x_min = std::clamp(clamped.x_min, 0.0, static_cast<double>(image_width));
    clamped.x_max = std::clamp(clamped.x_max, 0.0, static_cast<double>(image_width));
    clamped.y_min = std::clamp(clamped.y_min, 0.0, static_cast<double>(image_height));
    clamped.y_max = std::clamp(clamped.y_max, 0.0, static_cast<double>(image_height));
    if (clamped.x_min >= clamped.x_max || clamped.y_min >= clamped.y_max) return std::nullopt;
    return clamped;
}

RoiBox full_image_roi(int image_width, int image_height) {
    RoiBox roi;
    roi.x_min = 0;
    roi.y_min = 0;
    roi.x_max = image_width;
    roi.y_max = image_height;
    roi.side = std::max(image_width, image_height);
    roi.is_fallback = true;
    return roi;
}

RoiBox pad_and_square(const Detection& box, int image_width, int image_height,
                      double pad_fraction) {
    if (!(box.x_min < box.x_max) || !(box.y_min < box.y_max))
        throw ValidationError("pad_and_square: degenerate box");
    if (pad_fraction < 0.0)
        throw ValidationError("pad_and_square: negative pad_fraction");

    const double pad_x = pad_fraction * box.width();
    const double pad_y = pad_fraction * box.height();
    const double px_min = box.x_min - pad_x;
    const double px_max = box.x_max + pad_x;
    const double py_min = box.y_min - pad_y;
    const double py_max = box.y_max + pad_y;

    // Pixels covered by the padded box, rounded outward. The side is the
    // smallest power of two covering them; the crop must contain every such
    // pixel that lies inside the image whenever the square fits.
    const int ax0 = static_cast<int>(std::floor(px_min));
    const int bx0 = static_cast<int>(std::ceil(px_max));
    const int ay0 = static_cast<int>(std::floor(py_min));
    const int by0 = static_cast<int>(std::ceil(py_max));
    const int side = next_power_of_two(std::max(bx0 - ax0, by0 - ay0));

    const int ax = std::max(0, ax0);
    const int bx = std::min(image_width, bx0);
    const int ay = std::max(0, ay0);
    const int by = std::min(image_height, by0);

    RoiBox roi;
    roi.side = side;
    roi.is_fallback = false;

    if (side >= image_width) {
        roi.x_min = 0;
        roi.x_max = image_width;
        roi.square_waived_x = side > image_width;
    } else {
        const double cx = 0.5 * (px_min + px_max);
        int x0 = static_cast<int>(std::floor(cx + 0.5)) - side / 2;
        x0 = std::clamp(x0, std::max(0, bx - side), std::min(ax, image_width - side));
        roi.x_min = x0;
        roi.x_max = x0 + side;
    }
    if (side >= image_height) {
        roi.y_min = 0;
        roi.y_max = image_height;
        roi.square_waived_y = side > image_height;
    } else {
        const double cy = 0.5 * (py_min + py_max);
        int y0 = static_cast<int>(std::floor(cy + 0.5)) - side / 2;
        y0 = std::clamp(y0, std::max(0, by - side), std::min(ay, image_height - side));
        roi.y_min = y0;
        roi.y_max = y0 + side;
    }
    return roi;
}

Image crop_image(const Image& image, const RoiBox& roi) {
    Image out(roi.width(), roi.height(), image.channels);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < image.channels; ++c)
                out.at(y, x, c) = image.at(roi.y_min + y, roi.x_min + x, c);
    return out;
}

BinaryMask crop_mask(const BinaryMask& mask, const RoiBox& roi) {
    BinaryMask out(roi.width(), roi.height());
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            out.at(y, x) = mask.at(roi.y_min + y, roi.x_min + x);
    return out;
}

CropTransform crop_transform(const RoiBox& roi, int image_width, int image_height) {
    CropTransform t;
    t.x0 = roi.x_min;
    t.y0 = roi.y_min;
    t.crop_width = roi.width();
    t.crop_height = roi.height();
    t.full_width = image_width;
    t.full_height = image_height;
    return t;
}

BinaryMask paste_mask(const BinaryMask& cropped, const CropTransform& t) {
    if (cropped.width != t.crop_width || cropped.height != t.crop_height)
        throw ValidationError("paste_mask: crop size does not match transform");
    BinaryMask out(t.full_width, t.full_height, 0);
    for (int y = 0; y < cropped.height; ++y)
        for (int x = 0; x < cropped.width; ++x)
            out.at(t.y0 + y, t.x0 + x) = cropped.at(y, x);
    return out;
}

std::optional<Detection> mask_bounding_box(const BinaryMask& mask) {
    int x_min = mask.width, y_min = mask.height, x_max = -1, y_max = -1;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(y, x)) {
                x_min = std::min(x_min, x);
                y_min = std::min(y_min, y);
                x_max = std::max(x_max, x);
                y_max = std::max(y_max, y);
            }
    if (x_max < 0) return std::nullopt;
    Detection d;
    d.x_min = x_min;
    d.y_min = y_min;
    d.x_max = x_max + 1;
    d.y_max = y_max + 1;
    d.confidence = 1.0;
    return d;
}

}  // namespace iris::roi
