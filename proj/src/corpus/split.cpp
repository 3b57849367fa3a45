#include "iris/corpus/split.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "iris/error.hpp"
#include "iris/rng.hpp"

namespace iris::corpus {

SplitSpec split_dataset(const std::vector<ImageSample>& samples, std::uint64_t seed,
                        double train_fraction) {
    if (samples.empty()) throw ValidationError("split_dataset: empty sample list");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ValidationError("split_dataset: train_fraction must be in (0, 1)");

    std::vector<std::string> ids;
    ids.reserve(samples.size());
    for (const auto& s : samples) ids.push_back(s.id);

    Rng rng(seed);
    rng.shuffle(ids.begin(), ids.end());

    const auto n = static_cast<double>(ids.size());
    const auto train_n = static_cast<std::size_t>(std::floor(train_fraction * n + 0.5));
    if (train_n == 0)
        throw ValidationError("split_dataset: train set would be empty");
    if (train_n >= ids.size())
        throw ValidationError("split_dataset: test set would be empty (" +
                              std::to_string(ids.size()) + " samples, fraction " +
                              std::to_string(train_fraction) + ")");

    SplitSpec spec;
    spec.train_fraction = train_fraction;
    spec.seed = seed;
    spec.train_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(train_n));
    spec.test_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(train_n), ids.end());
    return spec;
}

void save_split(const SplitSpec& split, const std::string& path) {
    nlohmann::json j;
    j["train_fraction"] = split.train_fraction;
    j["seed"] = split.seed;
    j["train_ids"] = split.train_ids;
    j["test_ids"] = split.test_ids;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write split file: " + path);
    out << j.dump(2) << "\n";
}

SplitSpec load_split(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open split file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("split file " + path + ": " + e.what());
    }
    SplitSpec spec;
    try {
        spec.train_fraction = j.value("train_fraction", 0.8);
        spec.seed = j.value("seed", std::uint64_t{0});
        spec.train_ids = j.at("train_ids").get<std::vector<std::string>>();
        spec.test_ids = j.at("test_ids").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("split file " + path + ": " + e.what());
    }
    if (spec.train_ids.empty() || spec.test_ids.empty())
        throw ValidationError("split file " + path + ": train and test sets must be non-empty");
    return spec;
}

}  // namespace iris::corpus
