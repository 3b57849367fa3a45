#include "iris/nn/checkpoint.hpp"

#include <cstdint>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "iris/error.hpp"

namespace iris::nn {

namespace {

constexpr char kMagic[4] = {'I', 'R', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ParseError("checkpoint " + path + ": truncated file");
    return v;
}

std::string read_bytes(std::ifstream& in, std::size_t len, const std::string& path) {
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    if (!in) throw ParseError("checkpoint " + path + ": truncated file");
    return s;
}

struct TensorHeader {
    std::string name;
    std::vector<int> shape;
    std::size_t count;
};

TensorHeader read_tensor_header(std::ifstream& in, const std::string& path) {
    TensorHeader h;
    const auto name_len = read_pod<std::uint32_t>(in, path);
    if (name_len > 4096) throw ParseError("checkpoint " + path + ": implausible name length");
    h.name = read_bytes(in, name_len, path);
    const auto ndims = read_pod<std::uint32_t>(in, path);
    if (ndims > 8) throw ParseError("checkpoint " + path + ": implausible rank");
    h.count = 1;
    for (std::uint32_t i = 0; i < ndims; ++i) {
        const auto d = read_pod<std::int64_t>(in, path);
        if (d <= 0 || d > (std::int64_t{1} << 32))
            throw ParseError("checkpoint " + path + ": bad dimension");
        h.shape.push_back(static_cast<int>(d));
        h.count *= static_cast<std::size_t>(d);
    }
    return h;
}

std::string shape_string(const std::vector<int>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i)
        s += (i ? "," : "") + std::to_string(shape[i]);
    return s + "]";
}

}  // namespace

void save_checkpoint(const std::string& path, const nlohmann::json& meta,
                     const std::vector<ParamRef<float>>& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);

    out.write(kMagic, 4);
    write_pod(out, kVersion);
    const std::string meta_str = meta.dump();
    write_pod(out, static_cast<std::uint64_t>(meta_str.size()));
    out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));

    write_pod(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        write_pod(out, static_cast<std::uint32_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        write_pod(out, static_cast<std::uint32_t>(p.shape.size()));
        for (int d : p.shape) write_pod(out, static_cast<std::int64_t>(d));
        out.write(reinterpret_cast<const char*>(p.value->data()),
                  static_cast<std::streamsize>(p.value->size() * sizeof(float)));
    }
    if (!out) throw IoError("error while writing checkpoint: " + path);
}

nlohmann::json load_checkpoint(const std::string& path, std::vector<ParamRef<float>>& params,
                               bool require_complete) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);

    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != std::string(kMagic, 4))
        throw ParseError("checkpoint " + path + ": bad magic");
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kVersion)
        throw ParseError("checkpoint " + path + ": unsupported version " +
                         std::to_string(version));

    const auto meta_len = read_pod<std::uint64_t>(in, path);
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_bytes(in, meta_len, path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("checkpoint " + path + ": bad metadata: " + e.what());
    }

    std::unordered_map<std::string, ParamRef<float>*> by_name;
    for (auto& p : params) by_name[p.name] = &p;

    std::unordered_set<std::string> loaded;
    const auto n_tensors = read_pod<std::uint32_t>(in, path);
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        const auto header = read_tensor_header(in, path);
        auto it = by_name.find(header.name);
        if (it == by_name.end())
            throw ConfigError("checkpoint " + path + ": unknown tensor '" + header.name + "'");
        ParamRef<float>& p = *it->second;
        if (header.shape != p.shape)
            throw ConfigError("checkpoint " + path + ": tensor '" + header.name + "' has shape " +
                              shape_string(header.shape) + ", model expects " +
                              shape_string(p.shape));
        in.read(reinterpret_cast<char*>(p.value->data()),
                static_cast<std::streamsize>(header.count * sizeof(float)));
        if (!in) throw ParseError("checkpoint " + path + ": truncated tensor data");
        loaded.insert(header.name);
    }

    if (require_complete)
        for (const auto& p : params)
            if (!loaded.count(p.name))
                throw ConfigError("checkpoint " + path + ": missing tensor '" + p.name + "'");
    return meta;
}

nlohmann::json read_checkpoint_meta(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != std::string(kMagic, 4))
        throw ParseError("checkpoint " + path + ": bad magic");
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kVersion)
        throw ParseError("checkpoint " + path + ": unsupported version " +
                         std::to_string(version));
    const auto meta_len = read_pod<std::uint64_t>(in, path);
    try {
        return nlohmann::json::parse(read_bytes(in, meta_len, path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("checkpoint " + path + ": bad metadata: " + e.what());
    }
}

}  // namespace iris::nn
