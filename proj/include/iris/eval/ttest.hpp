#pragma once

#include <vector>

namespace iris::eval {

struct TTestResult {
    double t_statistic = 0.0;
    int degrees_of_freedom = 0;
    double p_value = 1.0;
    double alpha = 0.05;
    bool significant = false;
};

/// Regularized incomplete beta function I_x(a, b), continued-fraction
/// evaluation. Domain: a, b > 0 and x in [0, 1].
double regularized_incomplete_beta(double a, double b, double x);

/// Two-sided p-value of a Student t statistic with df degrees of freedom,
/// p = I_{df/(df+t^2)}(df/2, 1/2).
double student_t_two_sided_p(double t, int df);

/// Paired t-test over differences a - b. Requires equal lengths >= 2.
/// All-zero differences give t = 0, p = 1; zero-variance nonzero-mean
/// differences give a signed infinite t with p = 0.
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b,
                          double alpha = 0.05);

}  // namespace iris::eval
