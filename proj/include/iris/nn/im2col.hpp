#pragma once

#include <cstddef>

namespace iris::nn {

inline int conv_out_size(int in, int kernel, int stride, int pad) {
    return (in + 2 * pad - kernel) / stride + 1;
}

/// Unfolds one sample [C,H,W] into a [C*k*k, OH*OW] matrix (row-major) for
/// convolution by GEMM. Out-of-image taps read as zero.
template <typename T>
void im2col(const T* input, int channels, int height, int width, int kernel, int stride, int pad,
            T* col) {
    const int out_h = conv_out_size(height, kernel, stride, pad);
    const int out_w = conv_out_size(width, kernel, stride, pad);
    std::size_t r = 0;
    for (int c = 0; c < channels; ++c)
        for (int ky = 0; ky < kernel; ++ky)
            for (int kx = 0; kx < kernel; ++kx) {
                const T* plane = input + static_cast<std::size_t>(c) * height * width;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int y = oy * stride + ky - pad;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int x = ox * stride + kx - pad;
                        col[r++] = (y >= 0 && y < height && x >= 0 && x < width)
                                       ? plane[static_cast<std::size_t>(y) * width + x]
                                       : T(0);
                    }
                }
            }
}

/// Scatter-add inverse of im2col: folds a [C*k*k, OH*OW] matrix back onto a
/// [C,H,W] sample. The output must be zeroed by the caller beforehand.
template <typename T>
void col2im(const T* col, int channels, int height, int width, int kernel, int stride, int pad,
            T* output) {
    const int out_h = conv_out_size(height, kernel, stride, pad);
    const int out_w = conv_out_size(width, kernel, stride, pad);
    std::size_t r = 0;
    for (int c = 0; c < channels; ++c)
        for (int ky = 0; ky < kernel; ++ky)
            for (int kx = 0; kx < kernel; ++kx) {
                T* plane = output + static_cast<std::size_t>(c) * height * width;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int y = oy * stride + ky - pad;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int x = ox * stride + kx - pad;
                        if (y >= 0 && y < height && x >= 0 && x < width)
                            plane[static_cast<std::size_t>(y) * width + x] += col[r];
                        ++r;
                    }
                }
            }
}

}  // namespace iris::nn
