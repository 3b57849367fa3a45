#pragma once

#include <vector>

#include "iris/nn/layers.hpp"

namespace iris::nn {

/// Adam with optional decoupled-from-biases L2 weight decay: the decay term
/// is added to the gradient of parameters whose ParamRef has decay == true.
template <typename T>
class Adam {
public:
    explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8, double weight_decay = 0.0);

    /// One update over the parameter list. The list must be the same (same
    /// order, same sizes) on every call.
    void step(const std::vector<ParamRef<T>>& params);

    int iterations() const { return t_; }
    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }

private:
    double lr_, beta1_, beta2_, eps_, weight_decay_;
    int t_ = 0;
    std::vector<std::vector<T>> m_, v_;
};

}  // namespace iris::nn
