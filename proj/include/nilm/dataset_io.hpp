#pragma once

// Dataset on disk: manifest.json plus one CSV shard per split
// (one row = flattened input window + target window + rectangle triple + flags).

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nilm/csv.hpp"
#include "nilm/dataset.hpp"
#include "nilm/error.hpp"

namespace nilm {

inline constexpr int kDatasetFormatVersion = 1;

namespace detail {

inline void save_sample_shard(const std::string& path, const SampleSet& set) {
    CsvWriter w(path);
    std::vector<std::string> header;
    for (std::size_t i = 0; i < set.window * set.channels; ++i) header.push_back("in_" + std::to_string(i));
    for (std::size_t i = 0; i < set.window; ++i) header.push_back("target_" + std::to_string(i));
    header.insert(header.end(), {"start_frac", "end_frac", "mean_power_w", "has_activation", "synthetic"});
    w.header(header);
    std::vector<double> row;
    for (const Sample& s : set.samples) {
        row.clear();
        for (float v : s.input) row.push_back(v);
        for (float v : s.target_power) row.push_back(v);
        row.push_back(s.start_frac);
        row.push_back(s.end_frac);
        row.push_back(s.mean_power_w);
        row.push_back(s.has_activation);
        row.push_back(s.synthetic);
        w.row(row);
    }
}

inline SampleSet load_sample_shard(const std::string& path, std::size_t window, std::size_t channels) {
    NumericCsv csv = read_numeric_csv(path);
    const std::size_t expect = window * channels + window + 5;
    if (csv.header.size() != expect)
        throw ValidationError(path + ": expected " + std::to_string(expect) + " columns, got " +
                              std::to_string(csv.header.size()));
    SampleSet set;
    set.window = window;
    set.channels = channels;
    for (const auto& row : csv.rows) {
        Sample s;
        s.input.resize(window * channels);
        s.target_power.resize(window);
        std::size_t col = 0;
        for (std::size_t i = 0; i < window * channels; ++i) s.input[i] = static_cast<float>(row[col++]);
        for (std::size_t i = 0; i < window; ++i) s.target_power[i] = static_cast<float>(row[col++]);
        s.start_frac = static_cast<float>(row[col++]);
        s.end_frac = static_cast<float>(row[col++]);
        s.mean_power_w = static_cast<float>(row[col++]);
        s.has_activation = row[col++] != 0.0 ? 1 : 0;
        s.synthetic = row[col++] != 0.0 ? 1 : 0;
        set.samples.push_back(std::move(s));
    }
    return set;
}

}  // namespace detail

inline void save_dataset(const std::string& dir, const DatasetSplits& ds) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json j;
    j["format_version"] = kDatasetFormatVersion;
    j["appliance"] = ds.appliance;
    j["variant"] = ds.variant;
    j["window"] = ds.window;
    j["channels"] = ds.channels;
    j["seed"] = ds.seed;
    j["params"] = {{"on_power_threshold_w", ds.params.on_power_threshold_w},
                   {"min_on_s", ds.params.min_on_s},
                   {"max_on_s", ds.params.max_on_s},
                   {"border_samples", ds.params.border_samples},
                   {"merge_gap_s", ds.params.merge_gap_s}};
    j["norm"] = {{"sigma_input", ds.norm.sigma_input}, {"max_target", ds.norm.max_target}};
    j["mean_activation_samples"] = ds.mean_activation_samples;
    j["shards"] = {{"train", "train.csv"}, {"val", "val.csv"}, {"test1", "test1.csv"}, {"test2", "test2.csv"}};
    j["counts"] = {{"train", ds.train.size()},
                   {"val", ds.val.size()},
                   {"test1", ds.test1.size()},
                   {"test2", ds.test2.size()}};
    std::ofstream f(fs::path(dir) / "manifest.json");
    if (!f) throw Error("cannot write dataset manifest in " + dir);
    f << j.dump(2) << "\n";

    detail::save_sample_shard((fs::path(dir) / "train.csv").string(), ds.train);
    detail::save_sample_shard((fs::path(dir) / "val.csv").string(), ds.val);
    detail::save_sample_shard((fs::path(dir) / "test1.csv").string(), ds.test1);
    detail::save_sample_shard((fs::path(dir) / "test2.csv").string(), ds.test2);
}

inline DatasetSplits load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream f(fs::path(dir) / "manifest.json");
    if (!f) throw ValidationError("cannot open dataset manifest in " + dir);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(dir + "/manifest.json: " + e.what());
    }
    if (j.value("format_version", -1) != kDatasetFormatVersion)
        throw ValidationError(dir + ": unsupported dataset format version");

    DatasetSplits ds;
    ds.appliance = j.at("appliance").get<std::string>();
    ds.variant = j.at("variant").get<std::string>();
    ds.window = j.at("window").get<std::size_t>();
    ds.channels = j.at("channels").get<std::size_t>();
    ds.seed = j.at("seed").get<std::uint64_t>();
    const auto& p = j.at("params");
    ds.params.on_power_threshold_w = p.at("on_power_threshold_w").get<double>();
    ds.params.min_on_s = p.at("min_on_s").get<double>();
    ds.params.max_on_s = p.at("max_on_s").get<double>();
    ds.params.border_samples = p.at("border_samples").get<std::size_t>();
    ds.params.merge_gap_s = p.at("merge_gap_s").get<double>();
    ds.norm.sigma_input = j.at("norm").at("sigma_input").get<std::vector<double>>();
    ds.norm.max_target = j.at("norm").at("max_target").get<double>();
    ds.mean_activation_samples = j.at("mean_activation_samples").get<double>();

    auto shard = [&](const char* name) {
        return detail::load_sample_shard((fs::path(dir) / j.at("shards").at(name).get<std::string>()).string(),
                                         ds.window, ds.channels);
    };
    ds.train = shard("train");
    ds.val = shard("val");
    ds.test1 = shard("test1");
    ds.test2 = shard("test2");
    return ds;
}

}  // namespace nilm
