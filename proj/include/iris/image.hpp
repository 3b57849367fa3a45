#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace iris {

/// 8-bit image, interleaved row-major, 1 (gray) or 3 (RGB) channels.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> data;

    Image() = default;
    Image(int w, int h, int c, std::uint8_t fill = 0)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, fill) {}

    std::uint8_t& at(int y, int x, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int y, int x, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    bool empty() const { return data.empty(); }
};

/// Decodes an image file (PNG/JPEG/BMP/PGM/...). Throws IoError on failure.
/// Color files come back as 3-channel RGB, grayscale files as 1-channel.
Image load_image(const std::string& path);

/// Encodes by file extension. Throws IoError on failure.
void save_image(const Image& img, const std::string& path);

/// Width/height of an image file without keeping the pixels.
std::pair<int, int> probe_image_size(const std::string& path);

Image resize_bilinear(const Image& img, int out_w, int out_h);
Image resize_nearest(const Image& img, int out_w, int out_h);

/// Grayscale -> RGB by channel replication; RGB passes through.
Image to_rgb(const Image& img);

}  // namespace iris
