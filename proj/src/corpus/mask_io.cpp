#include "iris/corpus/mask_io.hpp"

#include "iris/error.hpp"
#include "iris/image.hpp"

namespace iris::corpus {

BinaryMask load_mask(const std::string& path) {
    const Image img = load_image(path);
    BinaryMask mask(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            std::uint8_t v = img.at(y, x, 0);
            for (int c = 1; c < img.channels; ++c) {
                if (img.at(y, x, c) != v)
                    throw ValidationError("mask " + path + ": channels disagree at (" +
                                          std::to_string(x) + "," + std::to_string(y) + ")");
            }
            mask.at(y, x) = v >= 128 ? 1 : 0;
        }
    }
    return mask;
}

void save_mask(const BinaryMask& mask, const std::string& path) {
    if (mask.width < 1 || mask.height < 1)
        throw ValidationError("save_mask: empty mask");
    Image img(mask.width, mask.height, 1);
    for (std::size_t i = 0; i < mask.labels.size(); ++i)
        img.data[i] = mask.labels[i] ? 255 : 0;
    save_image(img, path);
}

}  // namespace iris::corpus
