#pragma once

// Weights container: one compact JSON header line (spec, shapes, norm stats,
// format version, seed), then each tensor's raw little-endian float32 data in
// declared order, then a CRC32 (IEEE) of all preceding bytes, little-endian.

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nilm/dataset.hpp"
#include "nilm/error.hpp"
#include "nilm/net.hpp"

static_assert(std::endian::native == std::endian::little, "little-endian host required");

namespace nilm {

inline std::uint32_t crc32_ieee(const unsigned char* data, std::size_t len, std::uint32_t crc = 0) {
    static const std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1u) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    crc ^= 0xffffffffu;
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xffu] ^ (crc >> 8);
    return crc ^ 0xffffffffu;
}

inline constexpr int kWeightsFormatVersion = 1;

struct SavedModel {
    Network<float> net;
    NormStats norm;
    std::uint64_t seed = 0;
};

inline void save_model(const std::string& path, const Network<float>& net, const NormStats& norm,
                       std::uint64_t seed) {
    nlohmann::json j;
    j["format_version"] = kWeightsFormatVersion;
    j["arch"] = arch_kind_name(net.spec.kind);
    j["window"] = net.spec.window;
    j["channels"] = net.spec.channels;
    j["seed"] = seed;
    j["norm"] = {{"sigma_input", norm.sigma_input}, {"max_target", norm.max_target}};
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& t : net.params) tensors.push_back({{"shape", t.shape}});
    j["tensors"] = tensors;

    std::string header = j.dump();
    header.push_back('\n');

    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    std::uint32_t crc = crc32_ieee(reinterpret_cast<const unsigned char*>(header.data()), header.size());
    f.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& t : net.params) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(t.data.data());
        std::size_t n = t.data.size() * sizeof(float);
        crc = crc32_ieee(bytes, n, crc);
        f.write(reinterpret_cast<const char*>(bytes), static_cast<std::streamsize>(n));
    }
    f.write(reinterpret_cast<const char*>(&crc), sizeof crc);
    if (!f) throw Error("write failed: " + path);
}

inline SavedModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open " + path);
    std::string header;
    if (!std::getline(f, header)) throw ValidationError(path + ": truncated (no header)");
    header.push_back('\n');

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(header);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": bad weights header: " + e.what());
    }
    if (j.value("format_version", -1) != kWeightsFormatVersion)
        throw ValidationError(path + ": unsupported weights format version");

    SavedModel model;
    nlohmann::json tensors;
    try {
        model.seed = j.value("seed", std::uint64_t{0});
        model.norm.sigma_input = j.at("norm").at("sigma_input").get<std::vector<double>>();
        model.norm.max_target = j.at("norm").at("max_target").get<double>();
        NetworkSpec spec = build_architecture(arch_kind_from_name(j.at("arch").get<std::string>()),
                                              j.at("window").get<std::size_t>(),
                                              j.at("channels").get<std::size_t>());
        model.net = Network<float>(spec);
        tensors = j.at("tensors");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": bad weights header: " + e.what());
    }
    if (tensors.size() != model.net.params.size())
        throw ValidationError(path + ": tensor count mismatch for the declared architecture");

    std::uint32_t crc = crc32_ieee(reinterpret_cast<const unsigned char*>(header.data()), header.size());
    for (std::size_t i = 0; i < model.net.params.size(); ++i) {
        std::vector<std::size_t> shape;
        try {
            shape = tensors[i].at("shape").get<std::vector<std::size_t>>();
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(path + ": bad weights header: " + e.what());
        }
        if (shape != model.net.params[i].shape)
            throw ValidationError(path + ": tensor " + std::to_string(i) +
                                  " shape mismatch for the declared architecture");
        auto* bytes = reinterpret_cast<char*>(model.net.params[i].data.data());
        std::size_t n = model.net.params[i].data.size() * sizeof(float);
        f.read(bytes, static_cast<std::streamsize>(n));
        if (f.gcount() != static_cast<std::streamsize>(n)) throw ValidationError(path + ": truncated payload");
        crc = crc32_ieee(reinterpret_cast<const unsigned char*>(bytes), n, crc);
    }
    std::uint32_t stored = 0;
    f.read(reinterpret_cast<char*>(&stored), sizeof stored);
    if (f.gcount() != sizeof stored) throw ValidationError(path + ": truncated (missing checksum)");
    if (stored != crc) throw ValidationError(path + ": checksum mismatch");
    return model;
}

}  // namespace nilm
