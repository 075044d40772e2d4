#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "nilm/dataset_io.hpp"
#include "nilm/model_io.hpp"
#include "nilm/report_io.hpp"
#include "nilm/rng.hpp"

using namespace nilm;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const char* name) {
    auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("crc32 known vector") {
    // IEEE CRC32 of "123456789"
    const char* s = "123456789";
    CHECK(crc32_ieee(reinterpret_cast<const unsigned char*>(s), 9) == 0xCBF43926u);
}

TEST_CASE("weights container") {
    auto dir = scratch_dir("nilm_model_io");
    auto path = (dir / "model.nilm").string();

    auto spec = build_architecture(ArchKind::autoencoder, 16, 1);
    auto net = Network<float>::initialized(spec, 42);
    NormStats norm;
    norm.sigma_input = {123.5};
    norm.max_target = 2200.0;
    save_model(path, net, norm, 42);

    SUBCASE("round-trip reproduces forward outputs bit-exactly") {
        auto loaded = load_model(path);
        CHECK(loaded.norm.max_target == norm.max_target);
        CHECK(loaded.norm.sigma_input == norm.sigma_input);
        CHECK(loaded.seed == 42);
        CHECK(loaded.net.spec.kind == ArchKind::autoencoder);

        Rng rng(5);
        std::vector<float> input(16);
        for (auto& v : input) v = static_cast<float>(rng.uniform(-1, 1));
        auto a = net.forward(input, 1);
        auto b = loaded.net.forward(input, 1);
        CHECK(a == b);
    }

    SUBCASE("truncated files are rejected") {
        auto size = fs::file_size(path);
        fs::resize_file(path, size - 5);
        CHECK_THROWS_AS(load_model(path), ValidationError);
        fs::resize_file(path, 10);
        CHECK_THROWS_AS(load_model(path), ValidationError);
    }

    SUBCASE("corrupted payload fails the checksum") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(static_cast<std::streamoff>(fs::file_size(path)) - 100);  // inside the float payload
        char byte = 0x7f;
        f.write(&byte, 1);
        f.close();
        CHECK_THROWS_AS(load_model(path), ValidationError);
    }

    SUBCASE("a model from a different window fails shape checks on use") {
        auto loaded = load_model(path);
        std::vector<float> wrong(32, 0.0f);
        CHECK_THROWS_AS(loaded.net.forward(wrong, 1), ValidationError);
    }

    SUBCASE("a header declaring a different window fails the tensor shape check") {
        std::ifstream in(path, std::ios::binary);
        std::string header;
        std::getline(in, header);
        std::string rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        auto pos = header.find("\"window\":16");
        REQUIRE(pos != std::string::npos);
        header.replace(pos, 11, "\"window\":17");
        std::ofstream out(path, std::ios::binary);
        out << header << "\n" << rest;
        out.close();
        CHECK_THROWS_AS(load_model(path), ValidationError);
    }

    SUBCASE("an unsupported format version is rejected") {
        std::ifstream in(path, std::ios::binary);
        std::string header;
        std::getline(in, header);
        std::string rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        auto pos = header.find("\"format_version\":1");
        REQUIRE(pos != std::string::npos);
        header.replace(pos, 18, "\"format_version\":9");
        std::ofstream out(path, std::ios::binary);
        out << header << "\n" << rest;
        out.close();
        CHECK_THROWS_AS(load_model(path), ValidationError);
    }

    fs::remove_all(dir);
}

TEST_CASE("dataset save/load round-trip") {
    auto dir = scratch_dir("nilm_dataset_io");

    DatasetSplits ds;
    ds.appliance = "kettle";
    ds.variant = "lf";
    ds.window = 8;
    ds.channels = 1;
    ds.seed = 7;
    ds.params.on_power_threshold_w = 2000;
    ds.params.min_on_s = 12;
    ds.params.max_on_s = 300;
    ds.params.border_samples = 2;
    ds.mean_activation_samples = 4;
    for (SampleSet* s : {&ds.train, &ds.val, &ds.test1, &ds.test2}) {
        s->window = 8;
        s->channels = 1;
    }
    Rng rng(3);
    for (int i = 0; i < 10; ++i) {
        Sample s;
        s.input.resize(8);
        s.target_power.resize(8);
        for (auto& v : s.input) v = static_cast<float>(rng.uniform(0, 100));
        for (auto& v : s.target_power) v = static_cast<float>(rng.uniform(0, 50));
        s.start_frac = 0.25f;
        s.end_frac = 0.5f;
        s.mean_power_w = 42.0f;
        s.has_activation = i % 2;
        s.synthetic = i % 3 == 0;
        (i < 6 ? ds.train : ds.val).samples.push_back(std::move(s));
    }
    ds.test1 = ds.val;
    ds.test2 = ds.val;
    ds.norm = compute_norm_stats(ds.train);

    save_dataset(dir.string(), ds);
    auto loaded = load_dataset(dir.string());

    CHECK(loaded.appliance == ds.appliance);
    CHECK(loaded.window == ds.window);
    CHECK(loaded.params.min_on_s == ds.params.min_on_s);
    CHECK(loaded.norm.sigma_input == ds.norm.sigma_input);
    CHECK(loaded.norm.max_target == ds.norm.max_target);
    CHECK(loaded.mean_activation_samples == ds.mean_activation_samples);
    REQUIRE(loaded.train.size() == ds.train.size());
    for (std::size_t i = 0; i < ds.train.size(); ++i) {
        CHECK(loaded.train.samples[i].input == ds.train.samples[i].input);
        CHECK(loaded.train.samples[i].target_power == ds.train.samples[i].target_power);
        CHECK(loaded.train.samples[i].has_activation == ds.train.samples[i].has_activation);
        CHECK(loaded.train.samples[i].synthetic == ds.train.samples[i].synthetic);
        CHECK(loaded.train.samples[i].start_frac == ds.train.samples[i].start_frac);
    }

    SUBCASE("missing manifest is a validation error") {
        CHECK_THROWS_AS(load_dataset((dir / "nope").string()), ValidationError);
    }

    fs::remove_all(dir);
}

TEST_CASE("eval report and ROC files") {
    auto dir = scratch_dir("nilm_report_io");

    EvalReport r;
    r.appliance = "kettle";
    r.procedure = "rolling";
    r.mae = 22.48;
    r.reite = 0.609;
    r.accuracy = 0.987;
    r.precision = 0.686;
    r.recall = 0.967;
    r.f1 = 0.802;
    r.counts = {10, 5, 100, 2};
    r.auc = 0.998;
    r.threshold_w = 812.5;
    r.n_points = 117;
    r.created_unix_s = 1.75e9;

    auto path = (dir / "report.json").string();
    save_eval_report(path, r);
    auto loaded = load_eval_report(path);
    CHECK(loaded.appliance == r.appliance);
    CHECK(loaded.mae == r.mae);
    CHECK(loaded.counts.tp == 10);
    CHECK(loaded.counts.fn == 2);
    CHECK(loaded.threshold_w == r.threshold_w);

    save_roc_csv((dir / "roc.csv").string(), {{0.0, 0.0, 9.0}, {0.5, 1.0, 2.0}, {1.0, 1.0, 0.5}});
    auto csv = read_numeric_csv((dir / "roc.csv").string());
    CHECK(csv.header == std::vector<std::string>{"fpr", "tpr", "threshold"});
    CHECK(csv.rows.size() == 3);
    CHECK(csv.rows[1][1] == 1.0);

    fs::remove_all(dir);
}

TEST_CASE("run ledger appends and reloads") {
    auto dir = scratch_dir("nilm_ledger_io");
    auto path = (dir / "ledger.jsonl").string();

    RunRecord a;
    a.appliance = "kettle";
    a.model = "hf_autoencoder";
    a.optimizer = "adam";
    a.learning_rate = 0.001;
    a.seed = 99;
    a.best_iteration = 57;
    a.best_val_loss = 0.0123;
    a.val_auc = 0.984;
    a.weights_path = "runs/kettle/hf_autoencoder/adam_0.001.nilm";
    append_run_record(path, a);

    RunRecord b = a;
    b.optimizer = "adamax";
    b.val_auc = 0.979;
    b.failed = true;
    append_run_record(path, b);

    auto records = load_run_ledger(path);
    REQUIRE(records.size() == 2);
    CHECK(records[0].model == "hf_autoencoder");
    CHECK(records[0].val_auc == 0.984);
    CHECK(records[0].weights_path == a.weights_path);
    CHECK(records[1].failed);

    SUBCASE("bad lines are flagged with their line number") {
        std::ofstream f(path, std::ios::app);
        f << "{broken\n";
        f.close();
        CHECK_THROWS_AS(load_run_ledger(path), ValidationError);
    }

    fs::remove_all(dir);
}
