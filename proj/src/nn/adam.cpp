#include "iris/nn/adam.hpp"

#include <cmath>

#include "iris/error.hpp"

namespace iris::nn {

template <typename T>
Adam<T>::Adam(double learning_rate, double beta1, double beta2, double eps, double weight_decay)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {}

template <typename T>
void Adam<T>::step(const std::vector<ParamRef<T>>& params) {
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params[i].value->size(), T(0));
            v_[i].assign(params[i].value->size(), T(0));
        }
    }
    if (m_.size() != params.size())
        throw ValidationError("Adam: parameter list changed between steps");

    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& value = *params[i].value;
        auto& grad = *params[i].grad;
        if (m_[i].size() != value.size())
            throw ValidationError("Adam: parameter '" + params[i].name + "' changed size");
        const bool decay = params[i].decay && weight_decay_ != 0.0;
        for (std::size_t j = 0; j < value.size(); ++j) {
            double g = grad[j];
            if (decay) g += weight_decay_ * value[j];
            const double m = beta1_ * m_[i][j] + (1.0 - beta1_) * g;
            const double v = beta2_ * v_[i][j] + (1.0 - beta2_) * g * g;
            m_[i][j] = static_cast<T>(m);
            v_[i][j] = static_cast<T>(v);
            value[j] -= static_cast<T>(lr_ * (m / bc1) / (std::sqrt(v / bc2) + eps_));
        }
    }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace iris::nn
