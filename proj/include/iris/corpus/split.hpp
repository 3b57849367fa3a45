#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iris/corpus/manifest.hpp"

namespace iris::corpus {

/// Deterministic train/test partition of sample ids.
struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
};

/// Shuffles the sample ids with a seeded permutation and takes
/// round(train_fraction * N) for training (half-up rounding). Both resulting
/// sets must be non-empty, otherwise a ValidationError is thrown; the same
/// (samples, seed, fraction) always yields the same split.
SplitSpec split_dataset(const std::vector<ImageSample>& samples, std::uint64_t seed,
                        double train_fraction = 0.8);

void save_split(const SplitSpec& split, const std::string& path);
SplitSpec load_split(const std::string& path);

}  // namespace iris::corpus
