#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include "iris/error.hpp"
#include "iris/nn/adam.hpp"
#include "iris/nn/checkpoint.hpp"
#include "iris/nn/layers.hpp"
#include "iris/nn/losses.hpp"
#include "iris/rng.hpp"

using namespace iris;
using namespace iris::nn;

namespace {

Tensor<double> random_tensor(Rng& rng, int n, int c, int h, int w, double scale = 1.0) {
    Tensor<double> t(n, c, h, w);
    for (auto& v : t.data) v = rng.normal(0.0, scale);
    return t;
}

// Direct convolution loops, the shape/arithmetic oracle for the GEMM path.
Tensor<double> naive_conv(const Tensor<double>& x, const std::vector<double>& w,
                          const std::vector<double>& b, int out_c, int k, int stride, int pad) {
    const int oh = (x.h + 2 * pad - k) / stride + 1;
    const int ow = (x.w + 2 * pad - k) / stride + 1;
    Tensor<double> y(x.n, out_c, oh, ow);
    for (int n = 0; n < x.n; ++n)
        for (int oc = 0; oc < out_c; ++oc)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = b.empty() ? 0.0 : b[oc];
                    for (int ic = 0; ic < x.c; ++ic)
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx) {
                                const int iy = oy * stride + ky - pad;
                                const int ix = ox * stride + kx - pad;
                                if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) continue;
                                acc += x.at(n, ic, iy, ix) *
                                       w[((static_cast<std::size_t>(oc) * x.c + ic) * k + ky) * k +
                                         kx];
                            }
                    y.at(n, oc, oy, ox) = acc;
                }
    return y;
}

Tensor<double> naive_conv_transpose(const Tensor<double>& x, const std::vector<double>& w,
                                    const std::vector<double>& b, int out_c, int k, int stride,
                                    int pad) {
    const int oh = (x.h - 1) * stride - 2 * pad + k;
    const int ow = (x.w - 1) * stride - 2 * pad + k;
    Tensor<double> y(x.n, out_c, oh, ow);
    if (!b.empty())
        for (int n = 0; n < x.n; ++n)
            for (int oc = 0; oc < out_c; ++oc)
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox) y.at(n, oc, oy, ox) = b[oc];
    for (int n = 0; n < x.n; ++n)
        for (int ic = 0; ic < x.c; ++ic)
            for (int iy = 0; iy < x.h; ++iy)
                for (int ix = 0; ix < x.w; ++ix)
                    for (int oc = 0; oc < out_c; ++oc)
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx) {
                                const int oy = iy * stride + ky - pad;
                                const int ox = ix * stride + kx - pad;
                                if (oy < 0 || oy >= oh || ox < 0 || ox >= ow) continue;
                                y.at(n, oc, oy, ox) +=
                                    x.at(n, ic, iy, ix) *
                                    w[((static_cast<std::size_t>(ic) * out_c + oc) * k + ky) * k +
                                      kx];
                            }
    return y;
}

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
    REQUIRE(a.same_shape(b));
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

// Finite-difference check of a layer's backward pass under the probe loss
// L(y) = sum_i w_i y_i. Verifies the input gradient and every parameter
// gradient on a sampled subset of coordinates.
void gradcheck_layer(Layer<double>& layer, const Tensor<double>& x0, double tol = 1e-5,
                     int max_coords = 250) {
    Rng rng(8888);

    Tensor<double> y0 = layer.forward(x0, true);
    std::vector<double> probe(y0.size());
    for (auto& v : probe) v = rng.normal(0.0, 1.0);

    const auto loss_at = [&](const Tensor<double>& x) {
        const Tensor<double> y = layer.forward(x, true);
        double s = 0.0;
        for (std::size_t i = 0; i < y.data.size(); ++i) s += probe[i] * y.data[i];
        return s;
    };

    std::vector<ParamRef<double>> params;
    layer.collect_params("layer", params);
    zero_grads(params);

    layer.forward(x0, true);
    Tensor<double> dy = y0;
    dy.data = probe;
    const Tensor<double> dx = layer.backward(dy);

    const double h = 1e-5;
    const auto check_coord = [&](double analytic, const std::function<void(double)>& set,
                                 double base) {
        set(base + h);
        const double up = loss_at(x0);
        set(base - h);
        const double down = loss_at(x0);
        set(base);
        const double fd = (up - down) / (2.0 * h);
        const double denom = std::max({std::fabs(analytic), std::fabs(fd), 1e-7});
        CHECK(std::fabs(analytic - fd) / denom < tol);
    };

    // Input gradient.
    auto& x_mut = const_cast<Tensor<double>&>(x0);
    {
        const int total = static_cast<int>(x0.size());
        const int step = std::max(1, total / max_coords);
        for (int i = rng.uniform_int(0, step - 1); i < total; i += step) {
            const double base = x0.data[i];
            const auto setter = [&, i](double v) { x_mut.data[i] = v; };
            check_coord(dx.data[i], setter, base);
        }
    }

    // Parameter gradients.
    for (auto& p : params) {
        const int total = static_cast<int>(p.value->size());
        const int step = std::max(1, total / max_coords);
        for (int i = rng.uniform_int(0, step - 1); i < total; i += step) {
            const double base = (*p.value)[i];
            const double analytic = (*p.grad)[i];
            const auto setter = [&](double v) { (*p.value)[i] = v; };
            check_coord(analytic, setter, base);
        }
    }
}

}  // namespace

TEST_CASE("conv2d forward matches direct convolution") {
    Rng rng(1);
    for (const auto& [k, stride, pad] : std::vector<std::tuple<int, int, int>>{
             {3, 1, 1}, {4, 2, 1}, {1, 1, 0}, {3, 1, 0}}) {
        Conv2d<double> conv(3, 4, k, stride, pad);
        conv.init_he(rng);
        for (auto& v : conv.bias) v = rng.normal(0.0, 0.5);
        const auto x = random_tensor(rng, 2, 3, 9, 8);
        const auto y = conv.forward(x, false);
        const auto ref = naive_conv(x, conv.weight, conv.bias, 4, k, stride, pad);
        CHECK(y.same_shape(ref));
        CHECK(max_abs_diff(y, ref) < 1e-10);
    }
}

TEST_CASE("conv_transpose2d forward matches direct computation") {
    Rng rng(2);
    for (const auto& [k, stride, pad] : std::vector<std::tuple<int, int, int>>{
             {4, 2, 1}, {2, 2, 0}, {16, 8, 4}}) {
        ConvTranspose2d<double> conv(3, 2, k, stride, pad);
        conv.init_he(rng);
        for (auto& v : conv.bias) v = rng.normal(0.0, 0.5);
        const auto x = random_tensor(rng, 2, 3, 5, 6);
        const auto y = conv.forward(x, false);
        const auto ref = naive_conv_transpose(x, conv.weight, conv.bias, 2, k, stride, pad);
        CHECK(y.same_shape(ref));
        CHECK(max_abs_diff(y, ref) < 1e-10);
    }
}

TEST_CASE("conv output shapes") {
    Rng rng(3);
    Conv2d<double> c(2, 5, 3, 1, 1);
    c.init_he(rng);
    auto y = c.forward(Tensor<double>(1, 2, 32, 48), false);
    CHECK(y.shape() == std::array<int, 4>{1, 5, 32, 48});

    Conv2d<double> down(2, 5, 4, 2, 1);
    down.init_he(rng);
    y = down.forward(Tensor<double>(1, 2, 32, 48), false);
    CHECK(y.shape() == std::array<int, 4>{1, 5, 16, 24});

    ConvTranspose2d<double> up2(2, 2, 4, 2, 1);
    up2.init_he(rng);
    y = up2.forward(Tensor<double>(1, 2, 16, 24), false);
    CHECK(y.shape() == std::array<int, 4>{1, 2, 32, 48});

    ConvTranspose2d<double> up8(2, 2, 16, 8, 4);
    up8.init_he(rng);
    y = up8.forward(Tensor<double>(1, 2, 4, 6), false);
    CHECK(y.shape() == std::array<int, 4>{1, 2, 32, 48});

    CHECK_THROWS_AS(c.forward(Tensor<double>(1, 3, 8, 8), false), ValidationError);
}

TEST_CASE("layer gradients match finite differences") {
    Rng rng(4);

    SUBCASE("conv 3x3") {
        Conv2d<double> layer(3, 4, 3, 1, 1);
        layer.init_he(rng);
        gradcheck_layer(layer, random_tensor(rng, 1, 3, 7, 6));
    }
    SUBCASE("conv 4x4 stride 2") {
        Conv2d<double> layer(2, 3, 4, 2, 1);
        layer.init_he(rng);
        gradcheck_layer(layer, random_tensor(rng, 2, 2, 8, 8));
    }
    SUBCASE("conv 1x1") {
        Conv2d<double> layer(4, 2, 1, 1, 0);
        layer.init_he(rng);
        gradcheck_layer(layer, random_tensor(rng, 1, 4, 5, 5));
    }
    SUBCASE("conv transpose 4x4 stride 2") {
        ConvTranspose2d<double> layer(3, 2, 4, 2, 1);
        layer.init_he(rng);
        gradcheck_layer(layer, random_tensor(rng, 1, 3, 6, 5));
    }
    SUBCASE("conv transpose 16x16 stride 8") {
        ConvTranspose2d<double> layer(2, 2, 16, 8, 4);
        layer.init_he(rng);
        gradcheck_layer(layer, random_tensor(rng, 1, 2, 3, 3));
    }
    SUBCASE("max pool 2x2 stride 2") {
        // Inputs spread out so the finite-difference step cannot flip argmax.
        MaxPool2d<double> layer(2, 2);
        gradcheck_layer(layer, random_tensor(rng, 1, 3, 8, 8, 10.0));
    }
    SUBCASE("max pool 2x2 stride 1 same-padded") {
        MaxPool2d<double> layer(2, 1, 1, 1);
        gradcheck_layer(layer, random_tensor(rng, 1, 2, 5, 5, 10.0));
    }
    SUBCASE("relu") {
        ReLU<double> layer;
        gradcheck_layer(layer, random_tensor(rng, 1, 3, 6, 6, 5.0));
    }
    SUBCASE("leaky relu") {
        LeakyReLU<double> layer(0.2);
        gradcheck_layer(layer, random_tensor(rng, 1, 3, 6, 6, 5.0));
    }
    SUBCASE("sigmoid") {
        Sigmoid<double> layer;
        gradcheck_layer(layer, random_tensor(rng, 1, 3, 6, 6));
    }
    SUBCASE("instance norm") {
        InstanceNorm<double> layer(3);
        Rng init(10);
        for (auto& v : layer.gamma) v = init.uniform(0.5, 1.5);
        for (auto& v : layer.beta) v = init.normal(0.0, 0.3);
        gradcheck_layer(layer, random_tensor(rng, 2, 3, 6, 6));
    }
    SUBCASE("sequential conv-norm-activation chain") {
        Sequential<double> chain;
        auto* conv = chain.emplace<Conv2d<double>>("conv", 2, 4, 3, 1, 1);
        chain.emplace<InstanceNorm<double>>("norm", 4);
        chain.emplace<LeakyReLU<double>>("act", 0.2);
        conv->init_he(rng);
        gradcheck_layer(chain, random_tensor(rng, 1, 2, 7, 7));
    }
}

TEST_CASE("max pool picks window maxima with edge padding") {
    Tensor<double> x(1, 1, 4, 4);
    for (int y = 0; y < 4; ++y)
        for (int i = 0; i < 4; ++i) x.at(0, 0, y, i) = y * 4 + i;

    MaxPool2d<double> halving(2, 2);
    auto y = halving.forward(x, false);
    CHECK(y.shape() == std::array<int, 4>{1, 1, 2, 2});
    CHECK(y.at(0, 0, 0, 0) == 5);
    CHECK(y.at(0, 0, 0, 1) == 7);
    CHECK(y.at(0, 0, 1, 0) == 13);
    CHECK(y.at(0, 0, 1, 1) == 15);

    MaxPool2d<double> same(2, 1, 1, 1);
    y = same.forward(x, false);
    CHECK(y.shape() == std::array<int, 4>{1, 1, 4, 4});
    CHECK(y.at(0, 0, 0, 0) == 5);
    CHECK(y.at(0, 0, 3, 3) == 15);  // bottom-right window sees only the corner
    CHECK(y.at(0, 0, 3, 0) == 13);

    // 13x13 stays 13x13 under the stride-1 same pool.
    MaxPool2d<double> p6(2, 1, 1, 1);
    const auto grid = p6.forward(Tensor<double>(1, 1, 13, 13), false);
    CHECK(grid.h == 13);
    CHECK(grid.w == 13);
}

TEST_CASE("dropout masks in training and passes through at inference") {
    Rng rng(77);
    Dropout<double> drop(0.5, &rng);
    Tensor<double> x(1, 1, 20, 20, 2.0);

    const auto eval_out = drop.forward(x, false);
    CHECK(max_abs_diff(eval_out, x) == 0.0);

    const auto train_out = drop.forward(x, true);
    int zeros = 0, scaled = 0;
    for (double v : train_out.data) {
        if (v == 0.0)
            ++zeros;
        else if (std::fabs(v - 4.0) < 1e-12)
            ++scaled;
        else
            FAIL("unexpected dropout output value");
    }
    CHECK(zeros + scaled == 400);
    CHECK(zeros > 100);
    CHECK(scaled > 100);

    // Backward zeroes exactly the dropped positions and scales the kept ones.
    Tensor<double> dy(1, 1, 20, 20, 1.0);
    const auto dx = drop.backward(dy);
    for (std::size_t i = 0; i < dx.data.size(); ++i)
        CHECK(dx.data[i] == (train_out.data[i] == 0.0 ? 0.0 : 2.0));

    // Same seed, same mask.
    Rng rng_a(123), rng_b(123);
    Dropout<double> da(0.3, &rng_a), db(0.3, &rng_b);
    const auto ya = da.forward(x, true);
    const auto yb = db.forward(x, true);
    CHECK(max_abs_diff(ya, yb) == 0.0);

    CHECK_THROWS_AS(Dropout<double>(1.0, &rng), ValidationError);
}

TEST_CASE("instance norm output statistics") {
    Rng rng(5);
    InstanceNorm<double> norm(2);
    const auto x = random_tensor(rng, 2, 2, 8, 8, 3.0);
    const auto y = norm.forward(x, true);
    for (int n = 0; n < 2; ++n)
        for (int c = 0; c < 2; ++c) {
            double mean = 0.0, var = 0.0;
            for (int i = 0; i < 64; ++i) mean += y.at(n, c, i / 8, i % 8);
            mean /= 64.0;
            for (int i = 0; i < 64; ++i) {
                const double d = y.at(n, c, i / 8, i % 8) - mean;
                var += d * d;
            }
            var /= 64.0;
            CHECK(std::fabs(mean) < 1e-12);
            CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
        }
}

TEST_CASE("bilinear deconvolution kernel preserves constants away from borders") {
    ConvTranspose2d<double> up(2, 2, 4, 2, 1);
    up.init_bilinear();
    const auto y = up.forward(Tensor<double>(1, 2, 6, 6, 1.0), false);
    REQUIRE(y.h == 12);
    for (int c = 0; c < 2; ++c)
        for (int iy = 2; iy < 10; ++iy)
            for (int ix = 2; ix < 10; ++ix)
                CHECK(y.at(0, c, iy, ix) == doctest::Approx(1.0).epsilon(1e-12));

    ConvTranspose2d<double> bad(2, 3, 4, 2, 1);
    CHECK_THROWS_AS(bad.init_bilinear(), ValidationError);
}

TEST_CASE("softmax cross entropy values and gradient") {
    SUBCASE("uniform logits give ln 2") {
        const Tensor<float> logits(1, 2, 4, 4, 0.7f);
        Tensor<std::uint8_t> labels(1, 1, 4, 4);
        labels.data[3] = 1;
        const auto r = softmax_cross_entropy(logits, labels);
        CHECK(r.loss == doctest::Approx(0.6931471805599453).epsilon(1e-7));
    }

    SUBCASE("hand-computed two-pixel example") {
        Tensor<float> logits(1, 2, 1, 2);
        logits.at(0, 0, 0, 0) = 2.0f;  // pixel 0: class-0 logit 2, class-1 logit 0
        logits.at(0, 1, 0, 0) = 0.0f;
        logits.at(0, 0, 0, 1) = 0.0f;  // pixel 1: class-0 logit 0, class-1 logit 2
        logits.at(0, 1, 0, 1) = 2.0f;
        Tensor<std::uint8_t> labels(1, 1, 1, 2);
        labels.data[0] = 0;
        labels.data[1] = 1;
        const auto r = softmax_cross_entropy(logits, labels);
        CHECK(r.loss == doctest::Approx(0.1269280110429726).epsilon(1e-7));
    }

    SUBCASE("confident correct logits drive the loss to zero") {
        Tensor<float> logits(1, 2, 2, 2);
        Tensor<std::uint8_t> labels(1, 1, 2, 2);
        for (int i = 0; i < 4; ++i) {
            const bool one = i % 2 == 0;
            labels.data[i] = one;
            logits.data[i] = one ? -30.0f : 30.0f;      // channel 0
            logits.data[4 + i] = one ? 30.0f : -30.0f;  // channel 1
        }
        const auto r = softmax_cross_entropy(logits, labels);
        CHECK(r.loss >= 0.0);
        CHECK(r.loss < 1e-9);
    }

    SUBCASE("gradient matches finite differences") {
        Rng rng(9);
        Tensor<double> logits = random_tensor(rng, 1, 2, 3, 4);
        Tensor<std::uint8_t> labels(1, 1, 3, 4);
        for (auto& v : labels.data) v = rng.bernoulli(0.5);

        const auto r = softmax_cross_entropy(logits, labels);
        const double h = 1e-6;
        for (std::size_t i = 0; i < logits.data.size(); ++i) {
            const double base = logits.data[i];
            logits.data[i] = base + h;
            const double up = softmax_cross_entropy(logits, labels).loss;
            logits.data[i] = base - h;
            const double down = softmax_cross_entropy(logits, labels).loss;
            logits.data[i] = base;
            const double fd = (up - down) / (2.0 * h);
            CHECK(r.grad.data[i] == doctest::Approx(fd).epsilon(1e-4));
        }
        CHECK_THROWS_AS(softmax_cross_entropy(logits, Tensor<std::uint8_t>(1, 1, 5, 5)),
                        ValidationError);
    }
}

TEST_CASE("bce with logits and l1 loss gradients") {
    Rng rng(12);
    Tensor<double> x = random_tensor(rng, 1, 1, 4, 4);
    Tensor<double> t(1, 1, 4, 4);
    for (auto& v : t.data) v = rng.bernoulli(0.5) ? 1.0 : 0.0;

    const auto bce = bce_with_logits(x, t);
    CHECK(bce.loss >= 0.0);
    const auto l1 = l1_loss(x, t);
    CHECK(l1.loss >= 0.0);

    const double h = 1e-6;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double base = x.data[i];
        x.data[i] = base + h;
        const double bce_up = bce_with_logits(x, t).loss;
        const double l1_up = l1_loss(x, t).loss;
        x.data[i] = base - h;
        const double bce_down = bce_with_logits(x, t).loss;
        const double l1_down = l1_loss(x, t).loss;
        x.data[i] = base;
        CHECK(bce.grad.data[i] ==
              doctest::Approx((bce_up - bce_down) / (2.0 * h)).epsilon(1e-4));
        CHECK(l1.grad.data[i] == doctest::Approx((l1_up - l1_down) / (2.0 * h)).epsilon(1e-4));
    }

    // Extreme logits stay finite in the stable formulation.
    Tensor<double> extreme(1, 1, 1, 2);
    extreme.data[0] = 500.0;
    extreme.data[1] = -500.0;
    Tensor<double> ones(1, 1, 1, 2, 1.0);
    const auto r = bce_with_logits(extreme, ones);
    CHECK(std::isfinite(r.loss));
    CHECK(r.loss == doctest::Approx(250.0).epsilon(1e-9));
}

TEST_CASE("adam converges on a quadratic and applies selective decay") {
    std::vector<float> w{5.0f, -3.0f, 8.0f};
    std::vector<float> dw(3);
    std::vector<ParamRef<float>> params{{"w", &w, &dw, {3}, true}};

    Adam<float> opt(0.1);
    for (int step = 0; step < 300; ++step) {
        for (int i = 0; i < 3; ++i) dw[i] = 2.0f * (w[i] - 1.0f);
        opt.step(params);
    }
    CHECK(opt.iterations() == 300);
    for (float v : w) CHECK(v == doctest::Approx(1.0f).epsilon(1e-3));

    // Weight decay drains decay-flagged parameters under zero gradient but
    // leaves unflagged ones alone.
    std::vector<float> decayed{2.0f}, plain{2.0f};
    std::vector<float> gd(1, 0.0f), gp(1, 0.0f);
    std::vector<ParamRef<float>> both{{"d", &decayed, &gd, {1}, true},
                                      {"p", &plain, &gp, {1}, false}};
    Adam<float> wd(0.01, 0.9, 0.999, 1e-8, 1e-2);
    for (int step = 0; step < 200; ++step) wd.step(both);
    CHECK(std::fabs(decayed[0]) < 1.0f);
    CHECK(plain[0] == 2.0f);
}

TEST_CASE("checkpoints round-trip parameters and validate shapes") {
    const auto dir = std::filesystem::temp_directory_path() / "iris_nn_ckpt";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "model.ck").string();

    Rng rng(21);
    Sequential<float> model;
    auto* conv = model.emplace<Conv2d<float>>("conv", 2, 3, 3, 1, 1);
    model.emplace<InstanceNorm<float>>("norm", 3);
    conv->init_he(rng);

    std::vector<ParamRef<float>> params;
    model.collect_params("net", params);
    REQUIRE(params.size() == 4);  // weight, bias, gamma, beta
    CHECK(params[0].name == "net.conv.weight");

    nlohmann::json meta{{"kind", "test"}, {"iterations", 42}};
    save_checkpoint(path, meta, params);

    Sequential<float> reloaded;
    auto* conv2 = reloaded.emplace<Conv2d<float>>("conv", 2, 3, 3, 1, 1);
    reloaded.emplace<InstanceNorm<float>>("norm", 3);
    std::vector<ParamRef<float>> params2;
    reloaded.collect_params("net", params2);
    const auto meta2 = load_checkpoint(path, params2);
    CHECK(meta2["iterations"] == 42);
    CHECK(conv2->weight == conv->weight);

    SUBCASE("shape mismatch names the tensor") {
        Sequential<float> narrow;
        narrow.emplace<Conv2d<float>>("conv", 2, 5, 3, 1, 1);
        narrow.emplace<InstanceNorm<float>>("norm", 5);
        std::vector<ParamRef<float>> bad;
        narrow.collect_params("net", bad);
        try {
            load_checkpoint(path, bad);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("net.conv.weight") != std::string::npos);
        }
    }

    SUBCASE("file tensors absent from the model are rejected") {
        std::vector<ParamRef<float>> subset{params2[0]};
        CHECK_THROWS_AS(load_checkpoint(path, subset), ConfigError);
    }

    SUBCASE("missing tensors are rejected when completeness is required") {
        std::vector<ParamRef<float>> subset{params2[0]};
        nlohmann::json m;
        const auto partial = (dir / "partial.ck").string();
        save_checkpoint(partial, m, subset);
        CHECK_THROWS_AS(load_checkpoint(partial, params2, true), ConfigError);
        CHECK_NOTHROW(load_checkpoint(partial, params2, false));
    }

    SUBCASE("meta readback") {
        const auto m = read_checkpoint_meta(path);
        CHECK(m["kind"] == "test");
    }

    CHECK_THROWS_AS(load_checkpoint((dir / "missing.ck").string(), params2), IoError);
}
