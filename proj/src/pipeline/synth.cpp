#include "iris/pipeline/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "iris/corpus/mask_io.hpp"
#include "iris/error.hpp"
#include "iris/image.hpp"
#include "iris/mask.hpp"
#include "iris/rng.hpp"

namespace iris::pipeline {

namespace {

struct EyeParams {
    double cx = 0, cy = 0;
    double iris_radius = 0, pupil_radius = 0;
    double sclera_rx = 0, sclera_ry = 0;
    bool occluded = false;
    double lid_y = 0;  // rows above this line are covered when occluded
    double background = 0, sclera = 0, iris = 0, pupil = 0;
    double bg_amp = 0, bg_fx = 0, bg_fy = 0, bg_px = 0, bg_py = 0;
    double streak_amp = 0, streak_phase = 0;
    int streak_count = 0;
    double noise_sigma = 0;
    int tint = 0;  // VIS iris hue choice
};

EyeParams draw_params(Rng& rng, int side) {
    EyeParams p;
    p.cx = side * rng.uniform(0.38, 0.62);
    p.cy = side * rng.uniform(0.40, 0.60);
    p.iris_radius = side * rng.uniform(0.16, 0.28);
    p.pupil_radius = p.iris_radius * rng.uniform(0.30, 0.55);
    p.sclera_rx = p.iris_radius * rng.uniform(1.6, 2.0);
    p.sclera_ry = p.iris_radius * rng.uniform(1.15, 1.45);
    p.background = rng.uniform(150, 190);
    p.sclera = rng.uniform(215, 240);
    p.iris = rng.uniform(55, 105);
    p.pupil = rng.uniform(8, 28);
    p.bg_amp = rng.uniform(8, 18);
    p.bg_fx = rng.uniform(2, 5) * 2 * 3.14159265358979323846 / side;
    p.bg_fy = rng.uniform(2, 5) * 2 * 3.14159265358979323846 / side;
    p.bg_px = rng.uniform(0, 6.28);
    p.bg_py = rng.uniform(0, 6.28);
    p.streak_amp = rng.uniform(10, 22);
    p.streak_count = rng.uniform_int(8, 16);
    p.streak_phase = rng.uniform(0, 6.28);
    p.noise_sigma = rng.uniform(3, 7);
    p.tint = rng.uniform_int(0, 2);
    p.occluded = rng.bernoulli(1.0 / 3.0);
    p.lid_y = p.occluded ? p.cy - p.iris_radius * rng.uniform(0.15, 0.6) : 0.0;
    return p;
}

// Per-channel multipliers for the VIS rendering; NIR stays single-channel.
std::array<double, 3> region_tint(const EyeParams& p, int region) {
    static constexpr std::array<std::array<double, 3>, 3> kIrisTints{
        {{1.05, 0.78, 0.55}, {0.70, 0.88, 1.10}, {0.72, 1.05, 0.75}}};
    switch (region) {
        case 0: return {1.08, 0.88, 0.78};  // skin
        case 1: return {1.0, 0.99, 0.96};   // sclera
        case 2: return kIrisTints[static_cast<std::size_t>(p.tint)];
        default: return {1.0, 1.0, 1.0};    // pupil
    }
}

void render_eye(const EyeParams& p, int side, bool color, Rng& rng, Image& image,
                BinaryMask& mask) {
    const int channels = color ? 3 : 1;
    image = Image(side, side, channels);
    mask = BinaryMask(side, side);

    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            const double px = x + 0.5;
            const double py = y + 0.5;
            const double dx = px - p.cx;
            const double dy = py - p.cy;
            const double d = std::hypot(dx, dy);
            const double ellipse = (dx / p.sclera_rx) * (dx / p.sclera_rx) +
                                   (dy / p.sclera_ry) * (dy / p.sclera_ry);
            const bool under_lid = p.occluded && py < p.lid_y;

            int region = 0;
            double value = p.background +
                           p.bg_amp * std::sin(px * p.bg_fx + p.bg_px) *
                               std::sin(py * p.bg_fy + p.bg_py);
            if (!under_lid) {
                if (ellipse <= 1.0) {
                    region = 1;
                    value = p.sclera;
                }
                if (d <= p.iris_radius) {
                    region = 2;
                    value = p.iris + p.streak_amp *
                                         std::sin(p.streak_count * std::atan2(dy, dx) +
                                                  p.streak_phase);
                }
                if (d <= p.pupil_radius) {
                    region = 3;
                    value = p.pupil;
                }
            } else {
                value -= 15;  // eyelid reads slightly darker than open skin
            }

            const double noise = rng.normal(0.0, p.noise_sigma);
            const auto tint = region_tint(p, region);
            for (int c = 0; c < channels; ++c) {
                const double m = color ? tint[static_cast<std::size_t>(c)] : 1.0;
                const double v = std::clamp(value * m + noise, 0.0, 255.0);
                image.at(y, x, c) = static_cast<std::uint8_t>(std::lround(v));
            }
            if (!under_lid && d <= p.iris_radius && d > p.pupil_radius) mask.at(y, x) = 1;
        }
    }
}

nlohmann::json params_json(const EyeParams& p) {
    return {{"cx", p.cx},
            {"cy", p.cy},
            {"iris_radius", p.iris_radius},
            {"pupil_radius", p.pupil_radius},
            {"sclera_rx", p.sclera_rx},
            {"sclera_ry", p.sclera_ry},
            {"occluded", p.occluded},
            {"lid_y", p.lid_y},
            {"background", p.background},
            {"sclera", p.sclera},
            {"iris", p.iris},
            {"pupil", p.pupil},
            {"noise_sigma", p.noise_sigma}};
}

}  // namespace

std::string generate_synthetic_dataset(int n, int side, std::uint64_t seed,
                                       const std::string& output_dir,
                                       const SynthOptions& options) {
    if (n < 1) throw ValidationError("synthetic dataset needs n >= 1, got " + std::to_string(n));
    if (side < 64 || (side & (side - 1)) != 0)
        throw ValidationError("synthetic image side must be a power of two >= 64, got " +
                              std::to_string(side));

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(output_dir) / "images", ec);
    fs::create_directories(fs::path(output_dir) / "masks", ec);
    if (ec) throw IoError("cannot create " + output_dir + ": " + ec.message());

    Rng rng(seed);
    const bool color = options.spectrum == corpus::Spectrum::VIS;
    std::vector<corpus::ImageSample> samples;
    nlohmann::json params = nlohmann::json::object();

    for (int i = 0; i < n; ++i) {
        char suffix[16];
        std::snprintf(suffix, sizeof(suffix), "%03d", i);
        const std::string id = options.dataset_name + "_" + suffix;

        const EyeParams p = draw_params(rng, side);
        Image image;
        BinaryMask mask;
        render_eye(p, side, color, rng, image, mask);

        const std::string image_rel = "images/" + id + ".png";
        const std::string mask_rel = "masks/" + id + ".png";
        save_image(image, (fs::path(output_dir) / image_rel).string());
        corpus::save_mask(mask, (fs::path(output_dir) / mask_rel).string());

        corpus::ImageSample s;
        s.id = id;
        s.image_path = image_rel;
        s.mask_path = mask_rel;
        s.dataset = options.dataset_name;
        s.subject = "subject_" + std::to_string(i % 8);
        s.spectrum = options.spectrum;
        s.width = side;
        s.height = side;
        samples.push_back(std::move(s));
        params[id] = params_json(p);
    }

    const std::string manifest_path = (fs::path(output_dir) / "manifest.txt").string();
    corpus::save_manifest(samples, manifest_path);

    std::ofstream sidecar(fs::path(output_dir) / "params.json");
    if (!sidecar) throw IoError("cannot write params.json under " + output_dir);
    sidecar << params.dump(2) << "\n";
    return manifest_path;
}

}  // namespace iris::pipeline
