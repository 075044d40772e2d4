#pragma once

// EvalReport JSON, ROC point CSV, and the JSON-lines run ledger.

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nilm/csv.hpp"
#include "nilm/error.hpp"
#include "nilm/eval.hpp"
#include "nilm/train.hpp"

namespace nilm {

inline nlohmann::json eval_report_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["appliance"] = r.appliance;
    j["procedure"] = r.procedure;
    j["mae_w"] = r.mae;
    j["reite"] = r.reite;
    j["accuracy"] = r.accuracy;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["counts"] = {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"tn", r.counts.tn}, {"fn", r.counts.fn}};
    j["auc"] = r.auc;
    j["threshold_w"] = r.threshold_w;
    j["n_points"] = r.n_points;
    j["energy_pred_ws"] = r.energy_pred;
    j["energy_true_ws"] = r.energy_true;
    j["created_unix_s"] = r.created_unix_s;
    return j;
}

inline EvalReport eval_report_from_json(const nlohmann::json& j) {
    EvalReport r;
    r.appliance = j.value("appliance", std::string{});
    r.procedure = j.value("procedure", std::string{});
    r.mae = j.value("mae_w", 0.0);
    r.reite = j.value("reite", 0.0);
    r.accuracy = j.value("accuracy", 0.0);
    r.precision = j.value("precision", 0.0);
    r.recall = j.value("recall", 0.0);
    r.f1 = j.value("f1", 0.0);
    if (j.contains("counts")) {
        r.counts.tp = j["counts"].value("tp", std::size_t{0});
        r.counts.fp = j["counts"].value("fp", std::size_t{0});
        r.counts.tn = j["counts"].value("tn", std::size_t{0});
        r.counts.fn = j["counts"].value("fn", std::size_t{0});
    }
    r.auc = j.value("auc", 0.0);
    r.threshold_w = j.value("threshold_w", 0.0);
    r.n_points = j.value("n_points", std::size_t{0});
    r.energy_pred = j.value("energy_pred_ws", 0.0);
    r.energy_true = j.value("energy_true_ws", 0.0);
    r.created_unix_s = j.value("created_unix_s", 0.0);
    return r;
}

inline void save_eval_report(const std::string& path, const EvalReport& r) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path);
    f << eval_report_to_json(r).dump(2) << "\n";
}

inline EvalReport load_eval_report(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
    return eval_report_from_json(j);
}

inline void save_roc_csv(const std::string& path, const std::vector<RocPoint>& points) {
    CsvWriter w(path);
    w.header({"fpr", "tpr", "threshold"});
    for (const auto& p : points) w.row(std::vector<double>{p.fpr, p.tpr, p.threshold});
}

// ---------------------------------------------------------------------------
// Run ledger (JSON lines, one record per training run)
// ---------------------------------------------------------------------------

inline nlohmann::json run_record_to_json(const RunRecord& r) {
    return {{"appliance", r.appliance},
            {"model", r.model},
            {"optimizer", r.optimizer},
            {"lr", r.learning_rate},
            {"seed", r.seed},
            {"best_iter", r.best_iteration},
            {"best_val_loss", r.best_val_loss},
            {"val_auc", r.val_auc},
            {"failed", r.failed},
            {"weights_path", r.weights_path}};
}

inline RunRecord run_record_from_json(const nlohmann::json& j) {
    RunRecord r;
    r.appliance = j.at("appliance").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.optimizer = j.at("optimizer").get<std::string>();
    r.learning_rate = j.at("lr").get<double>();
    r.seed = j.value("seed", std::uint64_t{0});
    r.best_iteration = j.value("best_iter", std::size_t{0});
    r.best_val_loss = j.value("best_val_loss", 0.0);
    r.val_auc = j.value("val_auc", 0.0);
    r.failed = j.value("failed", false);
    r.weights_path = j.value("weights_path", std::string{});
    return r;
}

inline void append_run_record(const std::string& ledger_path, const RunRecord& r) {
    std::ofstream f(ledger_path, std::ios::app);
    if (!f) throw Error("cannot append to " + ledger_path);
    f << run_record_to_json(r).dump() << "\n";
}

inline std::vector<RunRecord> load_run_ledger(const std::string& ledger_path) {
    std::ifstream f(ledger_path);
    if (!f) throw ValidationError("cannot open " + ledger_path);
    std::vector<RunRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(run_record_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(ledger_path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace nilm
