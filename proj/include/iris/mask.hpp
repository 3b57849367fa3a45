#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iris/error.hpp"

namespace iris {

/// Per-pixel iris/non-iris labels, row-major, entries in {0, 1}.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> labels;

    BinaryMask() = default;
    BinaryMask(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), labels(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t& at(int y, int x) { return labels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return labels[static_cast<std::size_t>(y) * width + x]; }

    std::size_t size() const { return labels.size(); }
    bool same_shape(const BinaryMask& o) const { return width == o.width && height == o.height; }

    bool operator==(const BinaryMask& o) const {
        return width == o.width && height == o.height && labels == o.labels;
    }
};

inline BinaryMask complement(const BinaryMask& m) {
    BinaryMask out(m.width, m.height);
    for (std::size_t i = 0; i < m.labels.size(); ++i) out.labels[i] = m.labels[i] ? 0 : 1;
    return out;
}

inline void require_same_shape(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_shape(b))
        throw ValidationError("mask dimension mismatch: " + std::to_string(a.width) + "x" +
                              std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                              std::to_string(b.height));
}

}  // namespace iris
