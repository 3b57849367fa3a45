#include "iris/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "iris/nn/gemm.hpp"
#include "iris/nn/im2col.hpp"

namespace iris::nn {

template <typename T>
void zero_grads(std::vector<ParamRef<T>>& params) {
    for (auto& p : params) std::fill(p.grad->begin(), p.grad->end(), T(0));
}

// ---------------------------------------------------------------- Conv2d

template <typename T>
Conv2d<T>::Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad, bool bias)
    : weight(static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel),
      bias(bias ? out_channels : 0),
      dweight(weight.size()),
      dbias(this->bias.size()),
      in_c_(in_channels),
      out_c_(out_channels),
      k_(kernel),
      stride_(stride),
      pad_(pad),
      has_bias_(bias) {}

template <typename T>
void Conv2d<T>::init_he(Rng& rng) {
    const double std = std::sqrt(2.0 / (static_cast<double>(in_c_) * k_ * k_));
    for (auto& v : weight) v = static_cast<T>(rng.normal(0.0, std));
    std::fill(bias.begin(), bias.end(), T(0));
}

template <typename T>
void Conv2d<T>::init_normal(Rng& rng, double stddev) {
    for (auto& v : weight) v = static_cast<T>(rng.normal(0.0, stddev));
    std::fill(bias.begin(), bias.end(), T(0));
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x, bool) {
    if (x.c != in_c_)
        throw ValidationError("Conv2d: expected " + std::to_string(in_c_) + " channels, got " +
                              x.shape_string());
    x_ = x;
    const int oh = conv_out_size(x.h, k_, stride_, pad_);
    const int ow = conv_out_size(x.w, k_, stride_, pad_);
    if (oh <= 0 || ow <= 0)
        throw ValidationError("Conv2d: input " + x.shape_string() + " too small for kernel");

    Tensor<T> y(x.n, out_c_, oh, ow);
    const int kdim = in_c_ * k_ * k_;
    const int odim = oh * ow;
    std::vector<T> col(static_cast<std::size_t>(kdim) * odim);
    for (int n = 0; n < x.n; ++n) {
        im2col(x.sample(n), in_c_, x.h, x.w, k_, stride_, pad_, col.data());
        gemm(false, false, out_c_, odim, kdim, T(1), weight.data(), col.data(), T(0),
             y.sample(n));
        if (has_bias_) {
            T* out = y.sample(n);
            for (int oc = 0; oc < out_c_; ++oc)
                for (int i = 0; i < odim; ++i) out[static_cast<std::size_t>(oc) * odim + i] +=
                    bias[oc];
        }
    }
    return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& dy) {
    const int oh = dy.h, ow = dy.w;
    const int kdim = in_c_ * k_ * k_;
    const int odim = oh * ow;

    Tensor<T> dx(x_.n, x_.c, x_.h, x_.w);
    std::vector<T> col(static_cast<std::size_t>(kdim) * odim);
    std::vector<T> dcol(col.size());
    for (int n = 0; n < x_.n; ++n) {
        im2col(x_.sample(n), in_c_, x_.h, x_.w, k_, stride_, pad_, col.data());
        // dW += dY * col^T
        gemm(false, true, out_c_, kdim, odim, T(1), dy.sample(n), col.data(), T(1),
             dweight.data());
        if (has_bias_) {
            const T* g = dy.sample(n);
            for (int oc = 0; oc < out_c_; ++oc) {
                T s = T(0);
                for (int i = 0; i < odim; ++i) s += g[static_cast<std::size_t>(oc) * odim + i];
                dbias[oc] += s;
            }
        }
        // dcol = W^T * dY, folded back onto the input.
        gemm(true, false, kdim, odim, out_c_, T(1), weight.data(), dy.sample(n), T(0),
             dcol.data());
        col2im(dcol.data(), in_c_, x_.h, x_.w, k_, stride_, pad_, dx.sample(n));
    }
    return dx;
}

template <typename T>
void Conv2d<T>::collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".weight", &weight, &dweight, {out_c_, in_c_, k_, k_}, true});
    if (has_bias_) out.push_back({prefix + ".bias", &bias, &dbias, {out_c_}, false});
}

// ------------------------------------------------------- ConvTranspose2d

template <typename T>
ConvTranspose2d<T>::ConvTranspose2d(int in_channels, int out_channels, int kernel, int stride,
                                    int pad, bool bias)
    : weight(static_cast<std::size_t>(in_channels) * out_channels * kernel * kernel),
      bias(bias ? out_channels : 0),
      dweight(weight.size()),
      dbias(this->bias.size()),
      in_c_(in_channels),
      out_c_(out_channels),
      k_(kernel),
      stride_(stride),
      pad_(pad),
      has_bias_(bias) {}

template <typename T>
void ConvTranspose2d<T>::init_he(Rng& rng) {
    const double std = std::sqrt(2.0 / (static_cast<double>(in_c_) * k_ * k_));
    for (auto& v : weight) v = static_cast<T>(rng.normal(0.0, std));
    std::fill(bias.begin(), bias.end(), T(0));
}

template <typename T>
void ConvTranspose2d<T>::init_normal(Rng& rng, double stddev) {
    for (auto& v : weight) v = static_cast<T>(rng.normal(0.0, stddev));
    std::fill(bias.begin(), bias.end(), T(0));
}

template <typename T>
void ConvTranspose2d<T>::init_bilinear() {
    if (in_c_ != out_c_)
        throw ValidationError("init_bilinear requires matching channel counts");
    std::fill(weight.begin(), weight.end(), T(0));
    const int f = (k_ + 1) / 2;
    const double center = (k_ % 2 == 1) ? f - 1.0 : f - 0.5;
    for (int c = 0; c < in_c_; ++c)
        for (int y = 0; y < k_; ++y)
            for (int x = 0; x < k_; ++x) {
                const double v = (1.0 - std::fabs((y - center) / f)) *
                                 (1.0 - std::fabs((x - center) / f));
                weight[((static_cast<std::size_t>(c) * out_c_ + c) * k_ + y) * k_ + x] =
                    static_cast<T>(v);
            }
    std::fill(bias.begin(), bias.end(), T(0));
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::forward(const Tensor<T>& x, bool) {
    if (x.c != in_c_)
        throw ValidationError("ConvTranspose2d: expected " + std::to_string(in_c_) +
                              " channels, got " + x.shape_string());
    x_ = x;
    const int oh = (x.h - 1) * stride_ - 2 * pad_ + k_;
    const int ow = (x.w - 1) * stride_ - 2 * pad_ + k_;
    if (oh <= 0 || ow <= 0)
        throw ValidationError("ConvTranspose2d: degenerate output for input " + x.shape_string());

    Tensor<T> y(x.n, out_c_, oh, ow);
    const int kdim = out_c_ * k_ * k_;
    const int idim = x.h * x.w;
    std::vector<T> col(static_cast<std::size_t>(kdim) * idim);
    for (int n = 0; n < x.n; ++n) {
        // col = W^T * x, then fold col onto the (larger) output canvas.
        gemm(true, false, kdim, idim, in_c_, T(1), weight.data(), x.sample(n), T(0), col.data());
        col2im(col.data(), out_c_, oh, ow, k_, stride_, pad_, y.sample(n));
        if (has_bias_) {
            T* out = y.sample(n);
            const int odim = oh * ow;
            for (int oc = 0; oc < out_c_; ++oc)
                for (int i = 0; i < odim; ++i) out[static_cast<std::size_t>(oc) * odim + i] +=
                    bias[oc];
        }
    }
    return y;
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::backward(const Tensor<T>& dy) {
    const int kdim = out_c_ * k_ * k_;
    const int idim = x_.h * x_.w;

    Tensor<T> dx(x_.n, x_.c, x_.h, x_.w);
    std::vector<T> dcol(static_cast<std::size_t>(kdim) * idim);
    for (int n = 0; n < x_.n; ++n) {
        im2col(dy.sample(n), out_c_, dy.h, dy.w, k_, stride_, pad_, dcol.data());
        // dx = W * dcol; dW += x * dcol^T
        gemm(false, false, in_c_, idim, kdim, T(1), weight.data(), dcol.data(), T(0),
             dx.sample(n));
        gemm(false, true, in_c_, kdim, idim, T(1), x_.sample(n), dcol.data(), T(1),
             dweight.data());
        if (has_bias_) {
            const T* g = dy.sample(n);
            const int odim = dy.h * dy.w;
            for (int oc = 0; oc < out_c_; ++oc) {
                T s = T(0);
                for (int i = 0; i < odim; ++i) s += g[static_cast<std::size_t>(oc) * odim + i];
                dbias[oc] += s;
            }
        }
    }
    return dx;
}

template <typename T>
void ConvTranspose2d<T>::collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".weight", &weight, &dweight, {in_c_, out_c_, k_, k_}, true});
    if (has_bias_) out.push_back({prefix + ".bias", &bias, &dbias, {out_c_}, false});
}

// ------------------------------------------------------------- MaxPool2d

template <typename T>
MaxPool2d<T>::MaxPool2d(int kernel, int stride, int pad_right, int pad_bottom)
    : k_(kernel), stride_(stride), pad_r_(pad_right), pad_b_(pad_bottom) {}

template <typename T>
Tensor<T> MaxPool2d<T>::forward(const Tensor<T>& x, bool) {
    in_n_ = x.n;
    in_c_ = x.c;
    in_h_ = x.h;
    in_w_ = x.w;
    const int oh = (x.h + pad_b_ - k_) / stride_ + 1;
    const int ow = (x.w + pad_r_ - k_) / stride_ + 1;
    if (oh <= 0 || ow <= 0)
        throw ValidationError("MaxPool2d: input " + x.shape_string() + " too small");

    Tensor<T> y(x.n, x.c, oh, ow);
    argmax_.assign(y.size(), -1);
    std::size_t oi = 0;
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c) {
            const T* plane = x.sample(n) + static_cast<std::size_t>(c) * x.h * x.w;
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox, ++oi) {
                    T best = -std::numeric_limits<T>::infinity();
                    int best_idx = -1;
                    for (int ky = 0; ky < k_; ++ky) {
                        const int iy = oy * stride_ + ky;
                        if (iy >= x.h) break;
                        for (int kx = 0; kx < k_; ++kx) {
                            const int ix = ox * stride_ + kx;
                            if (ix >= x.w) break;
                            const T v = plane[static_cast<std::size_t>(iy) * x.w + ix];
                            if (v > best) {
                                best = v;
                                best_idx = iy * x.w + ix;
                            }
                        }
                    }
                    y.data[oi] = best;
                    argmax_[oi] = best_idx;
                }
        }
    return y;
}

template <typename T>
Tensor<T> MaxPool2d<T>::backward(const Tensor<T>& dy) {
    Tensor<T> dx(in_n_, in_c_, in_h_, in_w_);
    std::size_t oi = 0;
    const int odim = dy.h * dy.w;
    for (int n = 0; n < in_n_; ++n)
        for (int c = 0; c < in_c_; ++c) {
            T* plane = dx.sample(n) + static_cast<std::size_t>(c) * in_h_ * in_w_;
            const T* g = dy.sample(n) + static_cast<std::size_t>(c) * odim;
            for (int i = 0; i < odim; ++i, ++oi) plane[argmax_[oi]] += g[i];
        }
    return dx;
}

// ----------------------------------------------------------- activations

template <typename T>
Tensor<T> ReLU<T>::forward(const Tensor<T>& x, bool) {
    y_ = x;
    for (auto& v : y_.data) v = std::max(v, T(0));
    return y_;
}

template <typename T>
Tensor<T> ReLU<T>::backward(const Tensor<T>& dy) {
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i)
        if (y_.data[i] <= T(0)) dx.data[i] = T(0);
    return dx;
}

template <typename T>
Tensor<T> LeakyReLU<T>::forward(const Tensor<T>& x, bool) {
    y_ = x;
    for (auto& v : y_.data)
        if (v < T(0)) v *= alpha_;
    return y_;
}

template <typename T>
Tensor<T> LeakyReLU<T>::backward(const Tensor<T>& dy) {
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i)
        if (y_.data[i] < T(0)) dx.data[i] *= alpha_;
    return dx;
}

template <typename T>
Tensor<T> Sigmoid<T>::forward(const Tensor<T>& x, bool) {
    y_ = x;
    for (auto& v : y_.data) v = T(1) / (T(1) + std::exp(-v));
    return y_;
}

template <typename T>
Tensor<T> Sigmoid<T>::backward(const Tensor<T>& dy) {
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i)
        dx.data[i] *= y_.data[i] * (T(1) - y_.data[i]);
    return dx;
}

// --------------------------------------------------------------- Dropout

template <typename T>
Dropout<T>::Dropout(double probability, Rng* rng) : p_(probability), rng_(rng) {
    if (p_ < 0.0 || p_ >= 1.0) throw ValidationError("Dropout: probability must be in [0, 1)");
}

template <typename T>
Tensor<T> Dropout<T>::forward(const Tensor<T>& x, bool train) {
    active_ = train && p_ > 0.0;
    if (!active_) return x;
    const T keep_scale = static_cast<T>(1.0 / (1.0 - p_));
    mask_.resize(x.size());
    Tensor<T> y = x;
    for (std::size_t i = 0; i < y.data.size(); ++i) {
        mask_[i] = rng_->uniform() >= p_ ? keep_scale : T(0);
        y.data[i] *= mask_[i];
    }
    return y;
}

template <typename T>
Tensor<T> Dropout<T>::backward(const Tensor<T>& dy) {
    if (!active_) return dy;
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] *= mask_[i];
    return dx;
}

// ---------------------------------------------------------- InstanceNorm

template <typename T>
InstanceNorm<T>::InstanceNorm(int channels, double eps)
    : gamma(channels, T(1)),
      beta(channels, T(0)),
      dgamma(channels),
      dbeta(channels),
      channels_(channels),
      eps_(static_cast<T>(eps)) {}

template <typename T>
Tensor<T> InstanceNorm<T>::forward(const Tensor<T>& x, bool) {
    if (x.c != channels_)
        throw ValidationError("InstanceNorm: expected " + std::to_string(channels_) +
                              " channels, got " + x.shape_string());
    const int m = x.h * x.w;
    xhat_ = Tensor<T>(x.n, x.c, x.h, x.w);
    inv_std_.assign(static_cast<std::size_t>(x.n) * x.c, T(0));
    Tensor<T> y(x.n, x.c, x.h, x.w);
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c) {
            const T* in = x.sample(n) + static_cast<std::size_t>(c) * m;
            T* xh = xhat_.sample(n) + static_cast<std::size_t>(c) * m;
            T* out = y.sample(n) + static_cast<std::size_t>(c) * m;
            T mean = T(0);
            for (int i = 0; i < m; ++i) mean += in[i];
            mean /= static_cast<T>(m);
            T var = T(0);
            for (int i = 0; i < m; ++i) var += (in[i] - mean) * (in[i] - mean);
            var /= static_cast<T>(m);
            const T inv = T(1) / std::sqrt(var + eps_);
            inv_std_[static_cast<std::size_t>(n) * channels_ + c] = inv;
            for (int i = 0; i < m; ++i) {
                xh[i] = (in[i] - mean) * inv;
                out[i] = gamma[c] * xh[i] + beta[c];
            }
        }
    return y;
}

template <typename T>
Tensor<T> InstanceNorm<T>::backward(const Tensor<T>& dy) {
    const int m = dy.h * dy.w;
    Tensor<T> dx(dy.n, dy.c, dy.h, dy.w);
    for (int n = 0; n < dy.n; ++n)
        for (int c = 0; c < dy.c; ++c) {
            const T* g = dy.sample(n) + static_cast<std::size_t>(c) * m;
            const T* xh = xhat_.sample(n) + static_cast<std::size_t>(c) * m;
            T* out = dx.sample(n) + static_cast<std::size_t>(c) * m;
            const T inv = inv_std_[static_cast<std::size_t>(n) * channels_ + c];

            T sum_g = T(0), sum_gx = T(0);
            for (int i = 0; i < m; ++i) {
                sum_g += g[i];
                sum_gx += g[i] * xh[i];
            }
            dgamma[c] += sum_gx;
            dbeta[c] += sum_g;

            const T mean_g = sum_g / static_cast<T>(m);
            const T mean_gx = sum_gx / static_cast<T>(m);
            for (int i = 0; i < m; ++i)
                out[i] = gamma[c] * inv * (g[i] - mean_g - xh[i] * mean_gx);
        }
    return dx;
}

template <typename T>
void InstanceNorm<T>::collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".gamma", &gamma, &dgamma, {channels_}, false});
    out.push_back({prefix + ".beta", &beta, &dbeta, {channels_}, false});
}

// ------------------------------------------------------------ Sequential

template <typename T>
Tensor<T> Sequential<T>::forward(const Tensor<T>& x, bool train) {
    Tensor<T> cur = x;
    for (auto& [name, layer] : layers_) cur = layer->forward(cur, train);
    return cur;
}

template <typename T>
Tensor<T> Sequential<T>::backward(const Tensor<T>& dy) {
    Tensor<T> cur = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = it->second->backward(cur);
    return cur;
}

template <typename T>
void Sequential<T>::collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    for (auto& [name, layer] : layers_)
        layer->collect_params(prefix.empty() ? name : prefix + "." + name, out);
}

template void zero_grads<float>(std::vector<ParamRef<float>>&);
template void zero_grads<double>(std::vector<ParamRef<double>>&);
template class Conv2d<float>;
template class Conv2d<double>;
template class ConvTranspose2d<float>;
template class ConvTranspose2d<double>;
template class MaxPool2d<float>;
template class MaxPool2d<double>;
template class ReLU<float>;
template class ReLU<double>;
template class LeakyReLU<float>;
template class LeakyReLU<double>;
template class Sigmoid<float>;
template class Sigmoid<double>;
template class Dropout<float>;
template class Dropout<double>;
template class InstanceNorm<float>;
template class InstanceNorm<double>;
template class Sequential<float>;
template class Sequential<double>;

}  // namespace iris::nn
