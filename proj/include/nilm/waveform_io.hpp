#pragma once

// Raw waveform file format: JSON sidecar {fs_hz, f0_hz, channels, start_unix_s}
// next to a binary payload of little-endian IEEE-754 float32, interleaved v,i.

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nilm/error.hpp"
#include "nilm/waveform.hpp"

static_assert(std::endian::native == std::endian::little, "little-endian host required");

namespace nilm {

inline std::string waveform_payload_path(const std::string& sidecar_path) {
    std::string p = sidecar_path;
    if (p.size() > 5 && p.substr(p.size() - 5) == ".json") p = p.substr(0, p.size() - 5);
    return p + ".f32";
}

inline void save_waveform(const std::string& sidecar_path, const WaveformRecord& rec) {
    rec.validate();
    nlohmann::json j;
    j["fs_hz"] = rec.fs;
    j["f0_hz"] = rec.f0;
    j["channels"] = {"voltage", "current"};
    j["start_unix_s"] = rec.start_time;
    if (!rec.label.empty()) j["label"] = rec.label;
    std::ofstream sf(sidecar_path);
    if (!sf) throw Error("cannot write " + sidecar_path);
    sf << j.dump(2) << "\n";

    std::string payload_path = waveform_payload_path(sidecar_path);
    std::ofstream pf(payload_path, std::ios::binary);
    if (!pf) throw Error("cannot write " + payload_path);
    std::vector<float> buf(rec.size() * 2);
    for (std::size_t k = 0; k < rec.size(); ++k) {
        buf[2 * k] = static_cast<float>(rec.voltage[k]);
        buf[2 * k + 1] = static_cast<float>(rec.current[k]);
    }
    pf.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

inline WaveformRecord load_waveform(const std::string& sidecar_path) {
    std::ifstream sf(sidecar_path);
    if (!sf) throw ValidationError("cannot open " + sidecar_path);
    nlohmann::json j;
    try {
        sf >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(sidecar_path + ": malformed sidecar JSON: " + e.what());
    }
    WaveformRecord rec;
    try {
        rec.fs = j.at("fs_hz").get<double>();
        rec.f0 = j.at("f0_hz").get<double>();
        rec.start_time = j.value("start_unix_s", 0.0);
        rec.label = j.value("label", std::string{});
        auto channels = j.at("channels").get<std::vector<std::string>>();
        if (channels != std::vector<std::string>{"voltage", "current"})
            throw ValidationError(sidecar_path + ": channels must be [\"voltage\",\"current\"]");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(sidecar_path + ": bad sidecar field: " + e.what());
    }

    std::string payload_path = waveform_payload_path(sidecar_path);
    std::ifstream pf(payload_path, std::ios::binary | std::ios::ate);
    if (!pf) throw ValidationError("cannot open " + payload_path);
    std::streamsize bytes = pf.tellg();
    if (bytes % (2 * sizeof(float)) != 0)
        throw ValidationError(payload_path + ": payload size " + std::to_string(bytes) +
                              " is not a whole number of (v,i) float32 pairs");
    pf.seekg(0);
    std::size_t pairs = static_cast<std::size_t>(bytes) / (2 * sizeof(float));
    std::vector<float> buf(pairs * 2);
    pf.read(reinterpret_cast<char*>(buf.data()), bytes);
    if (!pf) throw ValidationError(payload_path + ": short read");
    rec.voltage.resize(pairs);
    rec.current.resize(pairs);
    for (std::size_t k = 0; k < pairs; ++k) {
        rec.voltage[k] = buf[2 * k];
        rec.current[k] = buf[2 * k + 1];
    }
    rec.validate();
    return rec;
}

}  // namespace nilm
