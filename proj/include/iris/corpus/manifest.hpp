#pragma once

#include <optional>
#include <string>
#include <vector>

namespace iris::corpus {

enum class Spectrum { NIR, VIS };

std::string to_string(Spectrum s);
Spectrum spectrum_from_string(const std::string& s);

/// Optional ground-truth iris box carried in the manifest (original-image
/// pixel coordinates, max-exclusive).
struct BoxAnnotation {
    double x_min = 0, y_min = 0, x_max = 0, y_max = 0;
};

/// One eye image plus its metadata. Immutable after manifest loading.
struct ImageSample {
    std::string id;
    std::string image_path;
    std::optional<std::string> mask_path;
    std::string dataset;
    std::string subject;
    Spectrum spectrum = Spectrum::NIR;
    int width = 0;
    int height = 0;
    std::optional<BoxAnnotation> box;
};

/// Reads a line-delimited manifest. Each non-empty, non-comment line is a
/// record of whitespace-separated key=value tokens with required keys
/// id, image_path, dataset, subject, spectrum and optional keys mask_path,
/// x_min, y_min, x_max, y_max. Paths are resolved relative to the manifest's
/// directory. Image (and mask) dimensions are read from the files.
///
/// Throws IoError if the file is missing, ParseError (naming the line) for a
/// malformed record, ValidationError for duplicate ids or a mask whose size
/// differs from its image.
std::vector<ImageSample> load_manifest(const std::string& path);

/// Writes samples in the format load_manifest reads. Paths are written as
/// given (the synthetic generator writes paths relative to the manifest).
void save_manifest(const std::vector<ImageSample>& samples, const std::string& path);

}  // namespace iris::corpus
