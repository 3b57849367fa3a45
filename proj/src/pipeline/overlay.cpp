#include "iris/pipeline/overlay.hpp"

#include "iris/error.hpp"

namespace iris::pipeline {

Image render_overlay(const Image& image, const BinaryMask& pred, const BinaryMask& truth) {
    require_same_shape(pred, truth);
    if (image.width != pred.width || image.height != pred.height)
        throw ValidationError("overlay image is " + std::to_string(image.width) + "x" +
                              std::to_string(image.height) + " but the masks are " +
                              std::to_string(pred.width) + "x" + std::to_string(pred.height));

    Image out = to_rgb(image);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const bool p = pred.at(y, x) != 0;
            const bool t = truth.at(y, x) != 0;
            if (p == t) continue;
            out.at(y, x, 0) = p ? 0 : 255;    // false negative -> red
            out.at(y, x, 1) = p ? 255 : 0;    // false positive -> green
            out.at(y, x, 2) = 0;
        }
    }
    return out;
}

}  // namespace iris::pipeline
