#pragma once

#include <cstdint>
#include <string>

#include "iris/corpus/manifest.hpp"

namespace iris::pipeline {

struct SynthOptions {
    std::string dataset_name = "synthetic";
    corpus::Spectrum spectrum = corpus::Spectrum::NIR;  // VIS renders in color
};

/// Writes n synthetic eye images (textured background, elliptical sclera,
/// iris annulus, pupil disc, occasional eyelid band) with exact iris masks
/// under output_dir/images and output_dir/masks, plus a manifest and a
/// params.json sidecar recording the geometry each image was drawn with.
/// Output is deterministic per (n, side, seed): rerunning reproduces every
/// file byte for byte. Returns the manifest path.
///
/// Throws ValidationError when n < 1 or side is not a power of two >= 64,
/// IoError when the directory cannot be written.
std::string generate_synthetic_dataset(int n, int side, std::uint64_t seed,
                                       const std::string& output_dir,
                                       const SynthOptions& options = {});

}  // namespace iris::pipeline
