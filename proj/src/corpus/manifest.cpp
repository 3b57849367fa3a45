#include "iris/corpus/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "iris/error.hpp"
#include "iris/image.hpp"

namespace fs = std::filesystem;

namespace iris::corpus {

std::string to_string(Spectrum s) { return s == Spectrum::NIR ? "NIR" : "VIS"; }

Spectrum spectrum_from_string(const std::string& s) {
    if (s == "NIR") return Spectrum::NIR;
    if (s == "VIS") return Spectrum::VIS;
    throw ParseError("unknown spectrum '" + s + "' (expected NIR or VIS)");
}

namespace {

std::map<std::string, std::string> parse_record(const std::string& line, int line_no) {
    std::map<std::string, std::string> kv;
    std::istringstream iss(line);
    std::string token;
    while (iss >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ParseError("manifest line " + std::to_string(line_no) +
                             ": expected key=value token, got '" + token + "'");
        const std::string key = token.substr(0, eq);
        if (kv.count(key))
            throw ParseError("manifest line " + std::to_string(line_no) + ": duplicate key '" +
                             key + "'");
        kv[key] = token.substr(eq + 1);
    }
    return kv;
}

std::string require(const std::map<std::string, std::string>& kv, const std::string& key,
                    int line_no) {
    auto it = kv.find(key);
    if (it == kv.end() || it->second.empty())
        throw ParseError("manifest line " + std::to_string(line_no) + ": missing field '" + key +
                         "'");
    return it->second;
}

double parse_double(const std::string& v, const std::string& key, int line_no) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ParseError("manifest line " + std::to_string(line_no) + ": field '" + key +
                         "' is not a number: '" + v + "'");
    }
}

std::string resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    if (path.is_absolute()) return path.string();
    return (base / path).lexically_normal().string();
}

}  // namespace

std::vector<ImageSample> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path);
    const fs::path base = fs::path(path).parent_path();

    std::vector<ImageSample> samples;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto kv = parse_record(line, line_no);
        if (kv.empty()) continue;

        ImageSample s;
        s.id = require(kv, "id", line_no);
        s.image_path = resolve(base, require(kv, "image_path", line_no));
        s.dataset = require(kv, "dataset", line_no);
        s.subject = require(kv, "subject", line_no);
        try {
            s.spectrum = spectrum_from_string(require(kv, "spectrum", line_no));
        } catch (const ParseError& e) {
            throw ParseError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
        if (auto it = kv.find("mask_path"); it != kv.end() && !it->second.empty())
            s.mask_path = resolve(base, it->second);

        const bool has_box = kv.count("x_min") || kv.count("y_min") || kv.count("x_max") ||
                             kv.count("y_max");
        if (has_box) {
            BoxAnnotation box;
            box.x_min = parse_double(require(kv, "x_min", line_no), "x_min", line_no);
            box.y_min = parse_double(require(kv, "y_min", line_no), "y_min", line_no);
            box.x_max = parse_double(require(kv, "x_max", line_no), "x_max", line_no);
            box.y_max = parse_double(require(kv, "y_max", line_no), "y_max", line_no);
            if (box.x_min >= box.x_max || box.y_min >= box.y_max)
                throw ParseError("manifest line " + std::to_string(line_no) +
                                 ": degenerate box annotation");
            s.box = box;
        }

        if (!seen_ids.insert(s.id).second)
            throw ValidationError("manifest: duplicate sample id '" + s.id + "' at line " +
                                  std::to_string(line_no));

        const auto [w, h] = probe_image_size(s.image_path);
        s.width = w;
        s.height = h;
        if (s.mask_path) {
            const auto [mw, mh] = probe_image_size(*s.mask_path);
            if (mw != w || mh != h)
                throw ValidationError("sample '" + s.id + "': mask size " + std::to_string(mw) +
                                      "x" + std::to_string(mh) + " does not match image " +
                                      std::to_string(w) + "x" + std::to_string(h));
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

void save_manifest(const std::vector<ImageSample>& samples, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path);
    for (const auto& s : samples) {
        out << "id=" << s.id << " image_path=" << s.image_path;
        if (s.mask_path) out << " mask_path=" << *s.mask_path;
        out << " dataset=" << s.dataset << " subject=" << s.subject
            << " spectrum=" << to_string(s.spectrum);
        if (s.box)
            out << " x_min=" << s.box->x_min << " y_min=" << s.box->y_min
                << " x_max=" << s.box->x_max << " y_max=" << s.box->y_max;
        out << "\n";
    }
    if (!out) throw IoError("error while writing manifest: " + path);
}

}  // namespace iris::corpus
