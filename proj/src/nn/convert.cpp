#include "iris/nn/convert.hpp"

#include "iris/error.hpp"

namespace iris::nn {

Tensor<float> image_to_input(const Image& img) {
    if (img.channels != 1 && img.channels != 3)
        throw ValidationError("expected a 1- or 3-channel image, got " +
                              std::to_string(img.channels) + " channels");
    Tensor<float> t(1, 3, img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const std::uint8_t v = img.at(y, x, img.channels == 1 ? 0 : c);
                t.at(0, c, y, x) = static_cast<float>(v) / 127.5f - 1.0f;
            }
    return t;
}

Tensor<float> mask_to_unit(const BinaryMask& mask) {
    Tensor<float> t(1, 1, mask.height, mask.width);
    for (std::size_t i = 0; i < mask.labels.size(); ++i)
        t.data[i] = mask.labels[i] ? 1.0f : 0.0f;
    return t;
}

BinaryMask unit_to_mask(const Tensor<float>& t, float threshold) {
    if (t.n != 1 || t.c != 1)
        throw ValidationError("expected a [1,1,H,W] score tensor, got " + t.shape_string());
    BinaryMask m(t.w, t.h);
    for (std::size_t i = 0; i < t.data.size(); ++i) m.labels[i] = t.data[i] >= threshold ? 1 : 0;
    return m;
}

}  // namespace iris::nn
