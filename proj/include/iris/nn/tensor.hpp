#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "iris/error.hpp"

namespace iris::nn {

/// Dense NCHW tensor.
template <typename T>
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_, T fill = T(0))
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

    T& at(int in, int ic, int iy, int ix) {
        return data[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
    }
    T at(int in, int ic, int iy, int ix) const {
        return data[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
    }

    /// Pointer to the start of sample `in`'s data.
    T* sample(int in) { return data.data() + static_cast<std::size_t>(in) * c * h * w; }
    const T* sample(int in) const {
        return data.data() + static_cast<std::size_t>(in) * c * h * w;
    }

    std::size_t size() const { return data.size(); }
    std::array<int, 4> shape() const { return {n, c, h, w}; }
    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    std::string shape_string() const {
        return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" +
               std::to_string(w);
    }
};

template <typename T>
inline void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* where) {
    if (!a.same_shape(b))
        throw ValidationError(std::string(where) + ": tensor shape mismatch " + a.shape_string() +
                              " vs " + b.shape_string());
}

}  // namespace iris::nn
