#include "iris/eval/ttest.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "iris/error.hpp"

namespace iris::eval {

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3.0e-16;
    constexpr double kFpMin = 1.0e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0))
        throw ValidationError("regularized_incomplete_beta: a and b must be positive");
    if (x < 0.0 || x > 1.0)
        throw ValidationError("regularized_incomplete_beta: x out of [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                         a * std::log(x) + b * std::log1p(-x);
    const double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, int df) {
    if (df < 1) throw ValidationError("student_t_two_sided_p: df must be >= 1");
    if (std::isinf(t)) return 0.0;
    const double nu = static_cast<double>(df);
    return regularized_incomplete_beta(nu / 2.0, 0.5, nu / (nu + t * t));
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b,
                          double alpha) {
    if (a.size() != b.size())
        throw ValidationError("paired_t_test: length mismatch (" + std::to_string(a.size()) +
                              " vs " + std::to_string(b.size()) + ")");
    if (a.size() < 2)
        throw ValidationError("paired_t_test: need at least 2 pairs");

    const std::size_t n = a.size();
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i] - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    TTestResult res;
    res.degrees_of_freedom = static_cast<int>(n) - 1;
    res.alpha = alpha;
    if (sd == 0.0) {
        if (mean == 0.0) {
            res.t_statistic = 0.0;
            res.p_value = 1.0;
        } else {
            res.t_statistic = mean > 0 ? std::numeric_limits<double>::infinity()
                                       : -std::numeric_limits<double>::infinity();
            res.p_value = 0.0;
        }
    } else {
        res.t_statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
        res.p_value = student_t_two_sided_p(res.t_statistic, res.degrees_of_freedom);
    }
    res.significant = res.p_value < alpha;
    return res;
}

}  // namespace iris::eval
