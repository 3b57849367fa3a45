#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iris/mask.hpp"

namespace iris::eval {

/// Pixel tallies with iris as the positive class.
struct PixelCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;

    std::int64_t total() const { return tp + fp + tn + fn; }
};

/// Per-image scores. precision/recall/f1 are empty when their denominator is
/// zero (e.g. an empty prediction).
struct EvalRecord {
    std::string sample_id;
    PixelCounts counts;
    double e = 0.0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
};

struct AggregateResult {
    double mean_e = 0.0;
    double std_e = 0.0;
    double mean_f1 = 0.0;
    double std_f1 = 0.0;
    int n = 0;
    int undefined_f1 = 0;  // records whose F1 was undefined and scored as 0
};

/// Per-pixel confusion tallies. Throws ValidationError on dimension mismatch.
PixelCounts confusion_counts(const BinaryMask& pred, const BinaryMask& truth);

/// Mean per-pixel XOR between the masks, in [0, 1]. Lower is better.
double segmentation_error(const BinaryMask& pred, const BinaryMask& truth);

std::optional<double> precision(const PixelCounts& c);
std::optional<double> recall(const PixelCounts& c);

/// Harmonic mean of precision and recall; empty when tp+fp, tp+fn or P+R is 0.
std::optional<double> f1_score(const PixelCounts& c);

/// Assembles the full per-image record.
EvalRecord evaluate_pair(const std::string& sample_id, const BinaryMask& pred,
                         const BinaryMask& truth);

/// Mean and sample standard deviation (n-1; zero when n == 1) of per-image E
/// and F1. Undefined F1 values are scored as 0 and counted in undefined_f1.
/// Throws ValidationError on an empty list.
AggregateResult aggregate(const std::vector<EvalRecord>& records);

void write_records_csv(const std::vector<EvalRecord>& records, const std::string& path);
std::vector<EvalRecord> read_records_csv(const std::string& path);

}  // namespace iris::eval
