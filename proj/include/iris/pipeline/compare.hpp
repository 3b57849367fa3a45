#pragma once

#include <vector>

#include "iris/eval/metrics.hpp"
#include "iris/eval/ttest.hpp"

namespace iris::pipeline {

/// Paired significance tests between two per-image result sets. Differences
/// are taken a - b, so a negative t on E (or a positive t on F1) favors a.
struct MethodComparison {
    eval::TTestResult e_test;
    eval::TTestResult f1_test;
    double mean_e_a = 0, mean_e_b = 0;
    double mean_f1_a = 0, mean_f1_b = 0;
    int n = 0;
};

/// Pairs the records by sample_id (order-independent) and runs paired
/// t-tests on per-image E and F1; undefined F1 scores as 0, matching the
/// aggregate convention. Throws ValidationError when either side repeats an
/// id or when the id sets differ, listing the symmetric difference.
MethodComparison compare_methods(const std::vector<eval::EvalRecord>& a,
                                 const std::vector<eval::EvalRecord>& b, double alpha = 0.05);

}  // namespace iris::pipeline
