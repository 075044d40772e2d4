// nilm: NILM pipeline command line.
// Subcommands: ingest, dataset build, train, select, predict, evaluate,
// features, report. See README.md for the config schema and file formats.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nilm/nilm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double now_unix() {
    return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

struct ApplianceConfig {
    nilm::ActivationParams params;
    double window_minutes = 0.0;
};

struct HouseConfig {
    std::string name;
    std::string aggregate;     // low-frequency CSV
    std::string aggregate_hf;  // multivariate CSV, optional
    std::map<std::string, std::string> appliances;
};

struct AppConfig {
    fs::path root;  // directory paths are resolved against
    std::uint64_t seed = 1;
    std::map<std::string, std::string> paths;  // recordings, datasets, runs, reports
    std::map<std::string, ApplianceConfig> appliances;
    double synthesis_p = 0.4;
    double synthesis_ratio = 1.0;
    std::vector<nilm::OptimizerConfig> grid = nilm::standard_grid();
    std::size_t iterations = 200;
    std::size_t batch_size = 64;
    std::string test_house;
    double test2_days = 14.0;
    std::vector<HouseConfig> houses;

    fs::path resolve(const std::string& p) const {
        fs::path path(p);
        return path.is_absolute() ? path : root / path;
    }

    fs::path dir_for(const std::string& key, const std::string& fallback) const {
        auto it = paths.find(key);
        return resolve(it != paths.end() ? it->second : fallback);
    }

    const ApplianceConfig& appliance(const std::string& name) const {
        auto it = appliances.find(name);
        if (it == appliances.end())
            throw nilm::ValidationError("appliance '" + name + "' not present in the config");
        return it->second;
    }
};

AppConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw nilm::ValidationError("cannot open config " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw nilm::ValidationError(std::string("config: ") + e.what());
    }

    AppConfig cfg;
    cfg.root = fs::absolute(path).parent_path();
    if (const char* env_root = std::getenv("NILM_ROOT"); env_root && *env_root)
        cfg.root = fs::path(env_root);

    try {
        cfg.seed = j.value("seed", std::uint64_t{1});
        if (j.contains("paths"))
            for (auto& [k, v] : j["paths"].items()) cfg.paths[k] = v.get<std::string>();
        for (auto& [name, a] : j.at("appliances").items()) {
            ApplianceConfig ac;
            ac.params.on_power_threshold_w = a.at("on_power_threshold_w").get<double>();
            ac.params.min_on_s = a.at("min_on_s").get<double>();
            ac.params.max_on_s = a.at("max_on_s").get<double>();
            ac.params.border_samples = a.value("border_samples", std::size_t{0});
            ac.params.merge_gap_s = a.value("merge_gap_s", 30.0);
            ac.window_minutes = a.at("window_minutes").get<double>();
            cfg.appliances[name] = ac;
        }
        if (j.contains("synthesis")) {
            cfg.synthesis_p = j["synthesis"].value("p", 0.4);
            cfg.synthesis_ratio = j["synthesis"].value("ratio", 1.0);
        }
        if (j.contains("grid")) {
            cfg.grid.clear();
            for (const auto& algo_name : j["grid"].at("optimizers")) {
                for (const auto& lr : j["grid"].at("learning_rates")) {
                    nilm::OptimizerConfig oc;
                    oc.algo = nilm::optimizer_from_name(algo_name.get<std::string>());
                    oc.learning_rate = lr.get<double>();
                    cfg.grid.push_back(oc);
                }
            }
        }
        if (j.contains("training")) {
            cfg.iterations = j["training"].value("iterations", std::size_t{200});
            cfg.batch_size = j["training"].value("batch_size", std::size_t{64});
        }
        cfg.test_house = j.value("test_house", std::string{});
        cfg.test2_days = j.value("test2_days", 14.0);
        if (j.contains("houses")) {
            for (const auto& h : j["houses"]) {
                HouseConfig hc;
                hc.name = h.at("name").get<std::string>();
                hc.aggregate = h.value("aggregate", std::string{});
                hc.aggregate_hf = h.value("aggregate_hf", std::string{});
                if (h.contains("appliances"))
                    for (auto& [k, v] : h["appliances"].items()) hc.appliances[k] = v.get<std::string>();
                cfg.houses.push_back(std::move(hc));
            }
        }
    } catch (const json::exception& e) {
        throw nilm::ValidationError(std::string("config: ") + e.what());
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// dataset build
// ---------------------------------------------------------------------------

std::vector<nilm::PowerSeries> load_canonical(const fs::path& path) {
    auto segments = nilm::load_power_series_csv(path.string());
    nilm::require_nonnegative(segments, path.string());
    return nilm::to_canonical_grid(std::move(segments));
}

nilm::HouseData load_house(const AppConfig& cfg, const HouseConfig& hc, const std::string& appliance,
                           bool need_hf) {
    nilm::HouseData house;
    house.name = hc.name;
    auto sub = hc.appliances.find(appliance);
    if (sub == hc.appliances.end())
        throw nilm::ValidationError("house '" + hc.name + "' has no submeter for " + appliance);
    house.submeter = load_canonical(cfg.resolve(sub->second));
    if (need_hf) {
        if (hc.aggregate_hf.empty())
            throw nilm::ValidationError("house '" + hc.name + "' has no aggregate_hf recording");
        house.aggregate_hf = nilm::load_multivariate_csv(cfg.resolve(hc.aggregate_hf).string());
    } else {
        if (hc.aggregate.empty())
            throw nilm::ValidationError("house '" + hc.name + "' has no aggregate recording");
        house.aggregate = load_canonical(cfg.resolve(hc.aggregate));
    }
    return house;
}

// Distractor pools for synthesis: other appliances' activations from the
// training region of the non-test houses.
nilm::SynthesisConfig build_synthesis(const AppConfig& cfg, const std::string& target_appliance,
                                      std::size_t window) {
    nilm::SynthesisConfig synth;
    synth.p = cfg.synthesis_p;
    for (const auto& [name, ac] : cfg.appliances) {
        if (name == target_appliance) continue;
        std::vector<nilm::Activation> pool;
        for (const auto& hc : cfg.houses) {
            if (hc.name == cfg.test_house) continue;
            auto it = hc.appliances.find(name);
            if (it == hc.appliances.end()) continue;
            for (const auto& seg : load_canonical(cfg.resolve(it->second))) {
                double cut = seg.end_time() - cfg.test2_days * 86400.0;
                for (auto& a : nilm::extract_activations(seg, ac.params, hc.name)) {
                    if (seg.time_at(a.end) > cut) continue;
                    if (a.length() <= window) pool.push_back(std::move(a));
                }
            }
        }
        if (!pool.empty()) synth.distractor_pools.push_back(std::move(pool));
    }
    return synth;
}

int cmd_dataset_build(const std::string& config_path, const std::string& appliance,
                      const std::string& variant, std::string out_dir) {
    AppConfig cfg = load_config(config_path);
    const ApplianceConfig& ac = cfg.appliance(appliance);
    if (cfg.test_house.empty()) throw nilm::ValidationError("config: test_house is required");

    nilm::BuildConfig bc;
    bc.appliance = appliance;
    bc.params = ac.params;
    bc.window = nilm::window_length_samples(ac.window_minutes, nilm::kCanonicalPeriodS);
    bc.channels = variant == "hf" ? 3 : 1;
    bc.synthetic = variant == "lf_syn";
    bc.synth_ratio = cfg.synthesis_ratio;
    bc.test_house = cfg.test_house;
    bc.test2_days = cfg.test2_days;
    bc.seed = nilm::derive_seed(cfg.seed, nilm::hash_name(appliance + "/" + variant));
    if (bc.synthetic) bc.synthesis = build_synthesis(cfg, appliance, bc.window);

    std::vector<nilm::HouseData> houses;
    for (const auto& hc : cfg.houses) houses.push_back(load_house(cfg, hc, appliance, bc.channels == 3));

    auto splits = nilm::build_splits(houses, bc);
    if (out_dir.empty())
        out_dir = (cfg.dir_for("datasets", "datasets") / (appliance + "_" + variant)).string();
    nilm::save_dataset(out_dir, splits);
    std::cout << "dataset " << appliance << "/" << variant << ": train " << splits.train.size()
              << ", val " << splits.val.size() << ", test1 " << splits.test1.size() << ", test2 "
              << splits.test2.size() << ", a=" << splits.mean_activation_samples << " -> " << out_dir
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train / select
// ---------------------------------------------------------------------------

int cmd_train(const std::string& config_path, const std::string& appliance, const std::string& model_name,
              std::string dataset_dir, unsigned jobs, std::optional<std::size_t> iterations_override,
              std::string out_dir, std::string ledger_path, unsigned retries) {
    AppConfig cfg = load_config(config_path);
    nilm::ModelKind model = nilm::model_kind_from_name(model_name);
    if (dataset_dir.empty())
        dataset_dir = (cfg.dir_for("datasets", "datasets") /
                       (appliance + "_" + nilm::dataset_variant_for(model)))
                          .string();
    auto data = nilm::load_dataset(dataset_dir);
    if (data.appliance != appliance)
        throw nilm::ValidationError("dataset at " + dataset_dir + " is for appliance " + data.appliance);

    if (out_dir.empty()) out_dir = (cfg.dir_for("runs", "runs") / appliance / model_name).string();
    fs::create_directories(out_dir);
    if (ledger_path.empty()) ledger_path = (cfg.dir_for("runs", "runs") / "ledger.jsonl").string();
    fs::create_directories(fs::path(ledger_path).parent_path());

    std::size_t iterations = iterations_override.value_or(cfg.iterations);
    std::uint64_t seed = nilm::derive_seed(cfg.seed, nilm::hash_name(appliance + ":" + model_name));

    auto entries =
        nilm::run_grid(appliance, model, data, iterations, cfg.batch_size, seed, jobs, cfg.grid, retries);
    for (const auto& e : entries) {
        nilm::RunRecord rec;
        rec.appliance = appliance;
        rec.model = model_name;
        rec.optimizer = nilm::optimizer_name(e.opt.algo);
        rec.learning_rate = e.opt.learning_rate;
        rec.seed = seed;
        rec.failed = e.result.failed;
        if (!e.result.failed) {
            rec.best_iteration = e.result.best_iteration;
            rec.best_val_loss = e.result.best_val_loss;
            rec.val_auc = e.result.val_auc;
            std::string stem = rec.optimizer + "_" + std::to_string(e.opt.learning_rate);
            rec.weights_path = (fs::path(out_dir) / (stem + ".nilm")).string();
            nilm::save_model(rec.weights_path, e.result.best_net, data.norm, seed);
            // loss curves for plotting
            nilm::CsvWriter curve((fs::path(out_dir) / (stem + "_loss.csv")).string());
            curve.header({"iteration", "train_loss", "val_loss"});
            for (std::size_t it = 0; it < e.result.val_loss.size(); ++it)
                curve.row(std::vector<double>{static_cast<double>(it), e.result.train_loss[it],
                                              e.result.val_loss[it]});
        }
        nilm::append_run_record(ledger_path, rec);
        std::cout << appliance << "/" << model_name << " " << rec.optimizer
                  << " lr=" << e.opt.learning_rate;
        if (e.result.failed)
            std::cout << " FAILED (" << e.result.failure << ")\n";
        else
            std::cout << " val_loss=" << e.result.best_val_loss << " val_auc=" << e.result.val_auc
                      << "\n";
    }
    auto best = nilm::pick_best_entry(entries);
    std::cout << "best: " << nilm::optimizer_name(entries[best].opt.algo)
              << " lr=" << entries[best].opt.learning_rate
              << " val_auc=" << entries[best].result.val_auc << "\n";
    return 0;
}

int cmd_select(const std::string& ledger_path, const std::string& appliance, const std::string& out_path) {
    auto records = nilm::load_run_ledger(ledger_path);
    struct Best {
        nilm::RunRecord rec;
        bool set = false;
    };
    std::map<std::string, Best> per_model;
    for (const auto& r : records) {
        if (r.appliance != appliance || r.failed) continue;
        auto& slot = per_model[r.model];
        if (!slot.set || r.val_auc > slot.rec.val_auc ||
            (r.val_auc == slot.rec.val_auc && r.best_val_loss < slot.rec.best_val_loss)) {
            slot.rec = r;
            slot.set = true;
        }
    }
    if (per_model.empty())
        throw nilm::ValidationError("no successful runs for appliance " + appliance + " in " + ledger_path);

    std::vector<nilm::SelectionEntry> table;
    json jtable = json::array();
    for (nilm::ModelKind kind : nilm::all_model_kinds()) {
        auto it = per_model.find(nilm::model_kind_name(kind));
        if (it == per_model.end()) continue;
        table.push_back({kind, it->second.rec.val_auc, it->second.rec.best_val_loss});
        jtable.push_back({{"model", it->second.rec.model},
                          {"val_auc", it->second.rec.val_auc},
                          {"best_val_loss", it->second.rec.best_val_loss},
                          {"weights_path", it->second.rec.weights_path}});
    }
    nilm::ModelKind selected = nilm::select_best_model(table);
    std::string selected_name = nilm::model_kind_name(selected);

    json out;
    out["appliance"] = appliance;
    out["selected_model"] = selected_name;
    out["weights_path"] = per_model[selected_name].rec.weights_path;
    out["table"] = jtable;
    if (!out_path.empty()) {
        std::ofstream f(out_path);
        if (!f) throw nilm::Error("cannot write " + out_path);
        f << out.dump(2) << "\n";
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// predict / evaluate
// ---------------------------------------------------------------------------

double threshold_from_validation(const nilm::SavedModel& model, const nilm::DatasetSplits& data) {
    auto predictor = nilm::make_window_predictor(model.net, model.norm);
    auto [scores, labels] = nilm::score_windows(data.val, predictor);
    return nilm::choose_threshold_max_f1(scores, labels);
}

nilm::PowerSeries rolling_predict_series(const nilm::SavedModel& model, const std::string& input_csv,
                                         double mean_activation_samples) {
    nilm::RollingConfig rc;
    rc.window = model.net.spec.window;
    rc.mean_activation_samples = mean_activation_samples;
    auto predictor = nilm::make_window_predictor(model.net, model.norm);
    if (model.net.spec.channels == 3) {
        auto segments = nilm::load_multivariate_csv(input_csv);
        if (segments.size() != 1)
            throw nilm::ValidationError(input_csv + ": rolling prediction needs one contiguous recording");
        return nilm::rolling_window_predict(segments[0], rc, predictor);
    }
    auto raw = nilm::load_power_series_csv(input_csv);
    nilm::require_nonnegative(raw, input_csv);
    auto segments = nilm::to_canonical_grid(std::move(raw));
    if (segments.size() != 1)
        throw nilm::ValidationError(input_csv + ": rolling prediction needs one contiguous recording");
    return nilm::rolling_window_predict(segments[0], rc, predictor);
}

int cmd_predict(const std::string& weights, const std::string& input_csv, const std::string& out_csv,
                const std::string& dataset_dir, double mean_activation_samples) {
    auto model = nilm::load_model(weights);
    double a = mean_activation_samples;
    if (a < 0) {
        if (dataset_dir.empty())
            throw nilm::ValidationError("predict needs --dataset or --mean-activation-samples");
        a = nilm::load_dataset(dataset_dir).mean_activation_samples;
    }
    auto pred = rolling_predict_series(model, input_csv, a);
    nilm::save_power_series_csv(out_csv, pred);
    std::cout << "wrote " << pred.size() << " samples to " << out_csv << "\n";
    return 0;
}

int cmd_evaluate(const std::string& procedure, const std::string& weights, const std::string& dataset_dir,
                 const std::string& split, const std::string& aggregate_csv, const std::string& truth_csv,
                 const std::string& out_path, double threshold, const std::string& appliance,
                 const std::string& pred_out) {
    auto model = nilm::load_model(weights);
    auto data = nilm::load_dataset(dataset_dir);
    double thr = threshold >= 0 ? threshold : threshold_from_validation(model, data);

    nilm::EvalReport report;
    if (procedure == "activations") {
        const nilm::SampleSet* set = nullptr;
        if (split == "val") set = &data.val;
        else if (split == "test1") set = &data.test1;
        else if (split == "test2") set = &data.test2;
        else if (split == "train") set = &data.train;
        else throw nilm::ValidationError("unknown split: " + split);
        auto predictor = nilm::make_window_predictor(model.net, model.norm);
        report = nilm::evaluate_activations(*set, predictor, thr);
    } else {
        if (aggregate_csv.empty() || truth_csv.empty())
            throw nilm::ValidationError("rolling evaluation needs --aggregate and --truth");
        auto pred = rolling_predict_series(model, aggregate_csv, data.mean_activation_samples);
        auto truth_raw = nilm::load_power_series_csv(truth_csv);
        nilm::require_nonnegative(truth_raw, truth_csv);
        auto truth_segments = nilm::to_canonical_grid(std::move(truth_raw));
        if (truth_segments.size() != 1)
            throw nilm::ValidationError(truth_csv + ": need one contiguous recording");
        report = nilm::evaluate_rolling(pred, truth_segments[0], model.net.spec.window, thr, data.params);
        if (!pred_out.empty()) nilm::save_power_series_csv(pred_out, pred);
    }
    report.appliance = appliance.empty() ? data.appliance : appliance;
    report.created_unix_s = now_unix();
    nilm::save_eval_report(out_path, report);
    if (!report.roc.empty()) {
        fs::path roc_path = fs::path(out_path);
        roc_path.replace_extension(".roc.csv");
        nilm::save_roc_csv(roc_path.string(), report.roc);
    }
    std::cout << "auc=" << report.auc << " f1=" << report.f1 << " mae=" << report.mae
              << " reite=" << report.reite << " threshold=" << report.threshold_w << " -> " << out_path
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

int cmd_ingest(const std::string& input, const std::string& out_dir, bool hf, std::string prefix) {
    fs::create_directories(out_dir);
    if (prefix.empty()) prefix = fs::path(input).stem().string();
    if (hf) {
        auto rec = nilm::load_waveform(input);
        auto result = nilm::hf_channel_series(rec);
        auto out = fs::path(out_dir) / (prefix + "_hf.csv");
        nilm::save_multivariate_csv(out.string(), result.series);
        std::size_t flagged = 0;
        for (auto f : result.low_current) flagged += f;
        std::cout << "wrote " << result.series.size() << " slots (" << flagged << " low-current) to "
                  << out.string() << "\n";
        return 0;
    }
    auto raw = nilm::load_power_series_csv(input);
    nilm::require_nonnegative(raw, input);
    auto segments = nilm::to_canonical_grid(std::move(raw));
    if (segments.empty()) throw nilm::ValidationError(input + ": no usable segments");
    for (std::size_t i = 0; i < segments.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "_%03zu.csv", i);
        auto out = fs::path(out_dir) / (prefix + name);
        nilm::save_power_series_csv(out.string(), segments[i]);
        std::cout << "wrote " << segments[i].size() << " samples to " << out.string() << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// features (identification study over waveform records)
// ---------------------------------------------------------------------------

int cmd_features(const std::string& input_dir, const std::string& out_dir, std::size_t bins,
                 std::size_t trees, std::size_t runs, std::uint64_t seed) {
    std::vector<fs::path> sidecars;
    for (const auto& entry : fs::directory_iterator(input_dir))
        if (entry.path().extension() == ".json") sidecars.push_back(entry.path());
    std::sort(sidecars.begin(), sidecars.end());
    if (sidecars.empty()) throw nilm::ValidationError("no .json waveform sidecars in " + input_dir);

    nilm::FeatureMatrix transient_rows, steady_rows;
    std::vector<std::string> labels;
    std::size_t skipped = 0;
    for (const auto& sc : sidecars) {
        try {
            auto rec = nilm::load_waveform(sc.string());
            if (rec.label.empty()) throw nilm::ValidationError("record has no label");
            auto features = nilm::record_features(rec);
            transient_rows.push_back(features.transient.values);
            steady_rows.push_back(features.steady.values);
            labels.push_back(rec.label);
        } catch (const nilm::Error& e) {
            ++skipped;
            std::cerr << "skipping " << sc.string() << ": " << e.what() << "\n";
        }
    }
    if (labels.empty()) throw nilm::ValidationError("no usable labeled records in " + input_dir);

    std::map<std::string, int> label_ids;
    for (const auto& l : labels) label_ids.emplace(l, 0);
    int next_id = 0;
    for (auto& [name, id] : label_ids) id = next_id++;
    std::vector<int> y;
    y.reserve(labels.size());
    for (const auto& l : labels) y.push_back(label_ids[l]);

    fs::create_directories(out_dir);
    auto write_matrix = [&](const std::string& name, const nilm::FeatureMatrix& rows,
                            nilm::FeatureMode mode) {
        nilm::CsvWriter w((fs::path(out_dir) / name).string());
        auto header = nilm::feature_names(mode);
        header.push_back("label");
        w.header(header);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::vector<std::string> cells;
            for (double v : rows[i]) cells.push_back(std::to_string(v));
            cells.push_back(labels[i]);
            w.row(cells);
        }
    };
    write_matrix("features_transient.csv", transient_rows, nilm::FeatureMode::transient);
    write_matrix("features_steady.csv", steady_rows, nilm::FeatureMode::steady);

    json importance;
    nilm::ForestParams fp;
    fp.n_trees = trees;
    fp.seed = seed;
    auto report_mode = [&](const std::string& name, const nilm::FeatureMatrix& rows,
                           nilm::FeatureMode mode) {
        auto rep = nilm::importance_report(rows, y, nilm::feature_names(mode), bins, fp);
        importance[name] = {{"features", rep.feature_names},
                            {"random_forest", rep.random_forest},
                            {"mutual_information", rep.mutual_information}};
    };
    report_mode("transient", transient_rows, nilm::FeatureMode::transient);
    report_mode("steady", steady_rows, nilm::FeatureMode::steady);
    {
        std::ofstream f(fs::path(out_dir) / "importance.json");
        f << importance.dump(2) << "\n";
    }

    // seeded stratified holdout benchmark: RF (mean +- std over runs) and 1-NN
    auto benchmark = [&](const nilm::FeatureMatrix& rows) {
        std::vector<double> rf_accs;
        double knn_acc = 0.0;
        for (std::size_t run = 0; run < runs; ++run) {
            nilm::Rng rng(nilm::derive_seed(seed, 900 + run));
            std::map<int, std::vector<std::size_t>> by_class;
            for (std::size_t i = 0; i < rows.size(); ++i) by_class[y[i]].push_back(i);
            std::vector<std::size_t> train_idx, test_idx;
            for (auto& [cls, idx] : by_class) {
                rng.shuffle(idx);
                std::size_t n_test = std::max<std::size_t>(1, idx.size() / 5);
                for (std::size_t k = 0; k < idx.size(); ++k)
                    (k < n_test ? test_idx : train_idx).push_back(idx[k]);
            }
            nilm::FeatureMatrix x_train, x_test;
            std::vector<int> y_train, y_test;
            for (auto i : train_idx) {
                x_train.push_back(rows[i]);
                y_train.push_back(y[i]);
            }
            for (auto i : test_idx) {
                x_test.push_back(rows[i]);
                y_test.push_back(y[i]);
            }
            nilm::ForestParams rfp = fp;
            rfp.seed = nilm::derive_seed(seed, run);
            auto model = nilm::train_forest(x_train, y_train, rfp);
            std::size_t rf_ok = 0, knn_ok = 0;
            for (std::size_t i = 0; i < x_test.size(); ++i) {
                if (nilm::forest_predict(model, x_test[i]) == y_test[i]) ++rf_ok;
                if (run == 0 && nilm::knn_classify(x_train, y_train, x_test[i]) == y_test[i]) ++knn_ok;
            }
            rf_accs.push_back(static_cast<double>(rf_ok) / static_cast<double>(x_test.size()));
            if (run == 0) knn_acc = static_cast<double>(knn_ok) / static_cast<double>(x_test.size());
        }
        double mean = 0;
        for (double a : rf_accs) mean += a;
        mean /= static_cast<double>(rf_accs.size());
        double var = 0;
        for (double a : rf_accs) var += (a - mean) * (a - mean);
        var /= static_cast<double>(rf_accs.size());
        json jb;
        jb["rf_accuracy_mean"] = mean;
        jb["rf_accuracy_std"] = std::sqrt(var);
        jb["rf_runs"] = rf_accs;
        jb["knn_accuracy"] = knn_acc;
        return jb;
    };
    json bench;
    bench["transient"] = benchmark(transient_rows);
    bench["steady"] = benchmark(steady_rows);
    // both modes concatenated, mirroring the combined study row
    nilm::FeatureMatrix both(transient_rows.size());
    for (std::size_t i = 0; i < transient_rows.size(); ++i) {
        both[i] = transient_rows[i];
        both[i].insert(both[i].end(), steady_rows[i].begin(), steady_rows[i].end());
    }
    bench["transient_plus_steady"] = benchmark(both);
    bench["records_used"] = labels.size();
    bench["records_skipped"] = skipped;
    {
        std::ofstream f(fs::path(out_dir) / "benchmark.json");
        f << bench.dump(2) << "\n";
    }
    std::cout << "features: " << labels.size() << " records, " << label_ids.size() << " classes, "
              << skipped << " skipped -> " << out_dir << "\n";
    std::cout << bench.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

int cmd_report(const std::string& reports_dir, const std::string& out_dir) {
    std::vector<fs::path> files;
    if (fs::is_directory(reports_dir))
        for (const auto& entry : fs::directory_iterator(reports_dir))
            if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw nilm::ValidationError("no report JSON files in " + reports_dir);

    // latest report wins per (appliance, procedure)
    std::map<std::pair<std::string, std::string>, nilm::EvalReport> merged;
    for (const auto& f : files) {
        auto r = nilm::load_eval_report(f.string());
        auto key = std::make_pair(r.appliance, r.procedure);
        auto it = merged.find(key);
        if (it == merged.end()) {
            merged[key] = r;
        } else {
            std::cerr << "duplicate report for " << r.appliance << "/" << r.procedure
                      << ": keeping the latest\n";
            if (r.created_unix_s >= it->second.created_unix_s) it->second = r;
        }
    }

    fs::create_directories(out_dir);
    nilm::CsvWriter csv((fs::path(out_dir) / "summary.csv").string());
    csv.header({"appliance", "procedure", "auc", "accuracy", "precision", "recall", "f1", "mae_w",
                "reite", "threshold_w"});
    json rows = json::array();
    for (const auto& [key, r] : merged) {
        csv.row(std::vector<std::string>{r.appliance, r.procedure, std::to_string(r.auc),
                                         std::to_string(r.accuracy), std::to_string(r.precision),
                                         std::to_string(r.recall), std::to_string(r.f1),
                                         std::to_string(r.mae), std::to_string(r.reite),
                                         std::to_string(r.threshold_w)});
        rows.push_back(nilm::eval_report_to_json(r));
    }
    {
        std::ofstream f(fs::path(out_dir) / "summary.json");
        f << rows.dump(2) << "\n";
    }
    std::cout << "merged " << merged.size() << " reports -> " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NILM pipeline: feature extraction, dataset construction, training, selection, evaluation"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Convert a recording to canonical series files");
    std::string in_path, ingest_out, prefix;
    bool ingest_hf = false;
    ingest->add_option("input", in_path, "Low-frequency CSV, or waveform sidecar JSON with --hf")
        ->required();
    ingest->add_option("--out", ingest_out, "Output directory")->required();
    ingest->add_flag("--hf", ingest_hf, "Input is a raw waveform; emit the multivariate 6 s series");
    ingest->add_option("--prefix", prefix, "Output file prefix (default: input stem)");

    // dataset build
    auto* dataset = app.add_subcommand("dataset", "Dataset operations");
    dataset->require_subcommand(1);
    auto* build = dataset->add_subcommand("build", "Build train/val/test splits for one appliance");
    std::string cfg_path, appliance, variant = "lf", ds_out;
    build->add_option("--config", cfg_path, "Config JSON")->required();
    build->add_option("--appliance", appliance, "Appliance name")->required();
    build->add_option("--variant", variant, "lf, lf_syn or hf")
        ->check(CLI::IsMember({"lf", "lf_syn", "hf"}));
    build->add_option("--out", ds_out, "Output dataset directory");

    // train
    auto* train = app.add_subcommand("train", "Run the optimizer grid for one model");
    std::string train_cfg, train_appliance, train_model, train_dataset, train_out, train_ledger;
    unsigned jobs = 1;
    std::size_t train_iterations = 0;
    bool has_iterations = false;
    train->add_option("--config", train_cfg, "Config JSON")->required();
    train->add_option("--appliance", train_appliance, "Appliance name")->required();
    train->add_option("--model", train_model, "One of the seven model names")->required();
    train->add_option("--dataset", train_dataset, "Dataset directory (default from config paths)");
    train->add_option("--jobs", jobs, "Parallel grid points");
    train->add_option("--iterations", train_iterations, "Override training iterations")
        ->each([&has_iterations](const std::string&) { has_iterations = true; });
    train->add_option("--out", train_out, "Weights output directory");
    train->add_option("--ledger", train_ledger, "Run ledger path (JSON lines)");
    unsigned train_retries = 0;
    train->add_option("--retries", train_retries, "Retries for diverged grid points (fresh seed)");

    // select
    auto* select = app.add_subcommand("select", "Pick the best model for an appliance from the ledger");
    std::string sel_ledger, sel_appliance, sel_out;
    select->add_option("--ledger", sel_ledger, "Run ledger path")->required();
    select->add_option("--appliance", sel_appliance, "Appliance name")->required();
    select->add_option("--out", sel_out, "Selection JSON output path");

    // predict
    auto* predict = app.add_subcommand("predict", "Rolling-window disaggregation of a series");
    std::string pr_weights, pr_input, pr_out, pr_dataset;
    double pr_a = -1.0;
    predict->add_option("--weights", pr_weights, "Weights file")->required();
    predict->add_option("--input", pr_input, "Aggregate series CSV")->required();
    predict->add_option("--out", pr_out, "Output CSV")->required();
    predict->add_option("--dataset", pr_dataset, "Dataset dir (source of the mean activation length)");
    predict->add_option("--mean-activation-samples", pr_a, "Mean activation length in samples");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a model");
    std::string ev_procedure, ev_weights, ev_dataset, ev_split = "test2", ev_aggregate, ev_truth;
    std::string ev_out, ev_appliance, ev_pred_out;
    double ev_threshold = -1.0;
    evaluate->add_option("--procedure", ev_procedure, "activations or rolling")
        ->required()
        ->check(CLI::IsMember({"activations", "rolling"}));
    evaluate->add_option("--weights", ev_weights, "Weights file")->required();
    evaluate->add_option("--dataset", ev_dataset, "Dataset directory")->required();
    evaluate->add_option("--split", ev_split, "Window split for the activations procedure");
    evaluate->add_option("--aggregate", ev_aggregate, "Aggregate CSV (rolling)");
    evaluate->add_option("--truth", ev_truth, "Submeter truth CSV (rolling)");
    evaluate->add_option("--out", ev_out, "Report JSON output path")->required();
    evaluate->add_option("--threshold", ev_threshold,
                         "Detection threshold in watts (default: max-F1 over validation)");
    evaluate->add_option("--appliance", ev_appliance, "Appliance name override in the report");
    evaluate->add_option("--save-pred", ev_pred_out, "Also write the rolling prediction CSV");

    // features
    auto* features = app.add_subcommand("features", "Waveform identification study");
    std::string ft_input, ft_out;
    std::size_t ft_bins = 10, ft_trees = 100, ft_runs = 3;
    std::uint64_t ft_seed = 1;
    features->add_option("--input", ft_input, "Directory of waveform sidecar JSON files")->required();
    features->add_option("--out", ft_out, "Output directory")->required();
    features->add_option("--bins", ft_bins, "Mutual information bins");
    features->add_option("--trees", ft_trees, "Random forest size");
    features->add_option("--runs", ft_runs, "Seeded benchmark repetitions");
    features->add_option("--seed", ft_seed, "Root seed");

    // report
    auto* report = app.add_subcommand("report", "Merge evaluation reports into summary tables");
    std::string rp_dir, rp_out;
    report->add_option("--reports", rp_dir, "Directory of report JSON files")->required();
    report->add_option("--out", rp_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*ingest) return cmd_ingest(in_path, ingest_out, ingest_hf, prefix);
        if (*build) return cmd_dataset_build(cfg_path, appliance, variant, ds_out);
        if (*train)
            return cmd_train(train_cfg, train_appliance, train_model, train_dataset, jobs,
                             has_iterations ? std::optional<std::size_t>(train_iterations) : std::nullopt,
                             train_out, train_ledger, train_retries);
        if (*select) return cmd_select(sel_ledger, sel_appliance, sel_out);
        if (*predict) return cmd_predict(pr_weights, pr_input, pr_out, pr_dataset, pr_a);
        if (*evaluate)
            return cmd_evaluate(ev_procedure, ev_weights, ev_dataset, ev_split, ev_aggregate, ev_truth,
                                ev_out, ev_threshold, ev_appliance, ev_pred_out);
        if (*features) return cmd_features(ft_input, ft_out, ft_bins, ft_trees, ft_runs, ft_seed);
        if (*report) return cmd_report(rp_dir, rp_out);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const nilm::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
