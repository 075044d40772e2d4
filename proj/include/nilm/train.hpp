#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "nilm/dataset.hpp"
#include "nilm/error.hpp"
#include "nilm/eval.hpp"
#include "nilm/net.hpp"
#include "nilm/optim.hpp"

namespace nilm {

// ---------------------------------------------------------------------------
// The seven models: architecture x training-set variant
// ---------------------------------------------------------------------------

enum class ModelKind {
    rectangles,
    rectangles_syn,
    hf_rectangles,
    autoencoder,
    autoencoder_syn,
    hf_autoencoder,
    big_autoencoder,
};

inline const std::vector<ModelKind>& all_model_kinds() {
    static const std::vector<ModelKind> kinds = {
        ModelKind::rectangles,  ModelKind::rectangles_syn, ModelKind::hf_rectangles,
        ModelKind::autoencoder, ModelKind::autoencoder_syn, ModelKind::hf_autoencoder,
        ModelKind::big_autoencoder};
    return kinds;
}

inline std::string model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::rectangles: return "rectangles";
        case ModelKind::rectangles_syn: return "rectangles_syn";
        case ModelKind::hf_rectangles: return "hf_rectangles";
        case ModelKind::autoencoder: return "autoencoder";
        case ModelKind::autoencoder_syn: return "autoencoder_syn";
        case ModelKind::hf_autoencoder: return "hf_autoencoder";
        case ModelKind::big_autoencoder: return "big_autoencoder";
    }
    throw Error("bad ModelKind");
}

inline ModelKind model_kind_from_name(const std::string& name) {
    for (ModelKind k : all_model_kinds())
        if (model_kind_name(k) == name) return k;
    throw ValidationError("unknown model: " + name);
}

inline ArchKind arch_for(ModelKind k) {
    switch (k) {
        case ModelKind::rectangles:
        case ModelKind::rectangles_syn: return ArchKind::rectangles;
        case ModelKind::hf_rectangles: return ArchKind::hf_rectangles;
        case ModelKind::autoencoder:
        case ModelKind::autoencoder_syn: return ArchKind::autoencoder;
        case ModelKind::hf_autoencoder: return ArchKind::hf_autoencoder;
        case ModelKind::big_autoencoder: return ArchKind::big_autoencoder;
    }
    throw Error("bad ModelKind");
}

/// Which dataset the model trains on; the syn variants differ only here.
inline std::string dataset_variant_for(ModelKind k) {
    switch (k) {
        case ModelKind::rectangles_syn:
        case ModelKind::autoencoder_syn: return "lf_syn";
        case ModelKind::hf_rectangles:
        case ModelKind::hf_autoencoder: return "hf";
        default: return "lf";
    }
}

inline std::size_t channels_for(ModelKind k) {
    return dataset_variant_for(k) == "hf" ? 3 : 1;
}

// ---------------------------------------------------------------------------
// Model runner: raw windows in, watt windows out
// ---------------------------------------------------------------------------

/// Wraps trained weights as a BatchWindowPredictor: standardizes each raw
/// window, forwards it, and unscales to watts. Rectangles-family outputs are
/// rasterized onto the window so both families share one evaluation path.
/// The returned callable references `net` and `norm`; keep both alive.
inline BatchWindowPredictor make_window_predictor(const Network<float>& net, const NormStats& norm) {
    return [&net, &norm](const std::vector<std::vector<float>>& inputs) {
        const std::size_t w = net.spec.window, c = net.spec.channels;
        const std::size_t b = inputs.size();
        std::vector<float> batch(b * w * c);
        for (std::size_t k = 0; k < b; ++k) {
            if (inputs[k].size() != w * c) throw ValidationError("predictor: window size mismatch");
            preprocess_input(inputs[k], w, c, norm, batch.data() + k * w * c);
        }
        std::vector<float> out = net.forward(batch, b);
        std::vector<std::vector<double>> result(b);
        if (is_rectangles_family(net.spec.kind)) {
            for (std::size_t k = 0; k < b; ++k)
                result[k] = rasterize_rectangle(out[k * 3], out[k * 3 + 1],
                                                unscale_output(out[k * 3 + 2], norm), w);
        } else {
            for (std::size_t k = 0; k < b; ++k) {
                result[k].resize(w);
                for (std::size_t t = 0; t < w; ++t)
                    result[k][t] = unscale_output(out[k * w + t], norm);
            }
        }
        return result;
    };
}

// ---------------------------------------------------------------------------
// Single training run
// ---------------------------------------------------------------------------

struct RunConfig {
    std::string appliance;
    ModelKind model = ModelKind::autoencoder;
    OptimizerConfig opt;
    std::size_t iterations = 200;  // one iteration = one pass over the training set
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
};

struct TrainResult {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::size_t best_iteration = 0;
    double best_val_loss = std::numeric_limits<double>::infinity();
    double val_auc = 0.0;
    bool failed = false;
    std::string failure;
    Network<float> best_net;
};

namespace detail {

struct PreparedData {
    std::size_t n = 0;
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    std::vector<float> inputs;   // standardized, n x in_dim
    std::vector<float> targets;  // scaled, n x out_dim
};

inline PreparedData prepare(const SampleSet& set, const NormStats& norm, bool rectangles) {
    PreparedData d;
    d.n = set.samples.size();
    d.in_dim = set.window * set.channels;
    d.out_dim = rectangles ? 3 : set.window;
    d.inputs.resize(d.n * d.in_dim);
    d.targets.resize(d.n * d.out_dim);
    for (std::size_t i = 0; i < d.n; ++i) {
        const Sample& s = set.samples[i];
        preprocess_input(s.input, set.window, set.channels, norm, d.inputs.data() + i * d.in_dim);
        if (rectangles) {
            d.targets[i * 3] = s.start_frac;
            d.targets[i * 3 + 1] = s.end_frac;
            d.targets[i * 3 + 2] = static_cast<float>(scale_target(s.mean_power_w, norm));
        } else {
            for (std::size_t t = 0; t < set.window; ++t)
                d.targets[i * d.out_dim + t] = static_cast<float>(scale_target(s.target_power[t], norm));
        }
    }
    return d;
}

inline double dataset_loss(const Network<float>& net, const PreparedData& d, std::size_t batch_size) {
    double sse = 0.0;
    std::size_t count = 0;
    std::vector<float> in, out;
    for (std::size_t base = 0; base < d.n; base += batch_size) {
        std::size_t b = std::min(batch_size, d.n - base);
        in.assign(d.inputs.begin() + static_cast<std::ptrdiff_t>(base * d.in_dim),
                  d.inputs.begin() + static_cast<std::ptrdiff_t>((base + b) * d.in_dim));
        out = net.forward(in, b);
        for (std::size_t i = 0; i < b * d.out_dim; ++i) {
            double diff = static_cast<double>(out[i]) -
                          static_cast<double>(d.targets[base * d.out_dim + i]);
            sse += diff * diff;
        }
        count += b * d.out_dim;
    }
    return sse / static_cast<double>(count);
}

}  // namespace detail

/// Trains for cfg.iterations epochs of minibatch MSE, evaluating the validation
/// loss after every epoch and keeping the weights from the best one. A
/// non-finite loss marks the run failed but keeps its history.
inline TrainResult train_run(const RunConfig& cfg, const DatasetSplits& data) {
    const bool rect = is_rectangles_family(arch_for(cfg.model));
    if (channels_for(cfg.model) != data.channels)
        throw ValidationError("model " + model_kind_name(cfg.model) + " expects " +
                              std::to_string(channels_for(cfg.model)) + " channel(s), dataset has " +
                              std::to_string(data.channels));
    if (data.train.samples.empty() || data.val.samples.empty())
        throw ValidationError("train_run: dataset splits not built");

    NetworkSpec spec = build_architecture(arch_for(cfg.model), data.window, data.channels);
    Network<float> net = Network<float>::initialized(spec, derive_seed(cfg.seed, 1));
    Optimizer<float> opt(net.params, cfg.opt);

    detail::PreparedData train = detail::prepare(data.train, data.norm, rect);
    detail::PreparedData val = detail::prepare(data.val, data.norm, rect);

    TrainResult result;
    result.best_net = net;

    std::vector<std::size_t> order(train.n);
    std::vector<float> batch_in, batch_target;
    for (std::size_t epoch = 0; epoch < cfg.iterations; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, 1000 + epoch));
        order.resize(train.n);
        for (std::size_t i = 0; i < train.n; ++i) order[i] = i;
        shuffle_rng.shuffle(order);

        double epoch_sse = 0.0;
        std::size_t epoch_count = 0;
        bool blew_up = false;
        for (std::size_t base = 0; base < train.n && !blew_up; base += cfg.batch_size) {
            std::size_t b = std::min(cfg.batch_size, train.n - base);
            batch_in.resize(b * train.in_dim);
            batch_target.resize(b * train.out_dim);
            for (std::size_t k = 0; k < b; ++k) {
                std::size_t s = order[base + k];
                std::copy_n(train.inputs.data() + s * train.in_dim, train.in_dim,
                            batch_in.data() + k * train.in_dim);
                std::copy_n(train.targets.data() + s * train.out_dim, train.out_dim,
                            batch_target.data() + k * train.out_dim);
            }
            ForwardCache<float> cache;
            std::vector<float> out = net.forward(batch_in, b, &cache);
            double loss = Network<float>::mse_loss(out, batch_target);
            if (!std::isfinite(loss)) {
                blew_up = true;
                result.failure = "non-finite training loss";
                break;
            }
            epoch_sse += loss * static_cast<double>(b * train.out_dim);
            epoch_count += b * train.out_dim;
            try {
                opt.step(net.params, net.backward(cache, batch_target));
            } catch (const Error& e) {
                blew_up = true;
                result.failure = e.what();
            }
        }
        if (blew_up) {
            result.failed = true;
            break;
        }
        result.train_loss.push_back(epoch_sse / static_cast<double>(epoch_count));
        double vloss = detail::dataset_loss(net, val, cfg.batch_size);
        result.val_loss.push_back(vloss);
        if (!std::isfinite(vloss)) {
            result.failed = true;
            result.failure = "non-finite validation loss";
            break;
        }
        if (vloss < result.best_val_loss) {
            result.best_val_loss = vloss;
            result.best_iteration = epoch;
            result.best_net = net;
        }
    }
    if (!std::isfinite(result.best_val_loss)) {
        result.failed = true;
        if (result.failure.empty()) result.failure = "no finite validation loss recorded";
        return result;
    }

    auto predictor = make_window_predictor(result.best_net, data.norm);
    auto [scores, labels] = score_windows(data.val, predictor, cfg.batch_size);
    result.val_auc = roc_auc(scores, labels).auc;
    return result;
}

// ---------------------------------------------------------------------------
// Optimizer grid
// ---------------------------------------------------------------------------

/// The six grid points: {adam, adamax} x {0.002, 0.001, 0.0005}.
inline std::vector<OptimizerConfig> standard_grid() {
    std::vector<OptimizerConfig> grid;
    for (OptimizerAlgo algo : {OptimizerAlgo::adam, OptimizerAlgo::adamax}) {
        for (double lr : {0.002, 0.001, 0.0005}) {
            OptimizerConfig c;
            c.algo = algo;
            c.learning_rate = lr;
            grid.push_back(c);
        }
    }
    return grid;
}

struct GridEntry {
    OptimizerConfig opt;
    TrainResult result;
};

/// Runs every grid point; points are independent jobs and may run in parallel.
/// Per-point seeds derive from (seed, point index, retry attempt), so results
/// do not depend on the job count. Diverged points are retried with a fresh
/// seed up to `retries` times; a point that keeps failing stays failed.
inline std::vector<GridEntry> run_grid(const std::string& appliance, ModelKind model,
                                       const DatasetSplits& data, std::size_t iterations,
                                       std::size_t batch_size, std::uint64_t seed, unsigned jobs = 1,
                                       const std::vector<OptimizerConfig>& grid = standard_grid(),
                                       unsigned retries = 0) {
    std::vector<GridEntry> entries(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) entries[i].opt = grid[i];

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= grid.size()) return;
            RunConfig cfg;
            cfg.appliance = appliance;
            cfg.model = model;
            cfg.opt = grid[i];
            cfg.iterations = iterations;
            cfg.batch_size = batch_size;
            for (unsigned attempt = 0; attempt <= retries; ++attempt) {
                cfg.seed = derive_seed(seed, 7000 + i + 1000 * attempt);
                entries[i].result = train_run(cfg, data);
                if (!entries[i].result.failed) break;
            }
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < std::min<unsigned>(jobs, static_cast<unsigned>(grid.size())); ++t)
            pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return entries;
}

/// Trains the whole grid and returns the best point by validation AUC.
inline GridEntry grid_search(const std::string& appliance, ModelKind model, const DatasetSplits& data,
                             std::size_t iterations, std::size_t batch_size, std::uint64_t seed,
                             unsigned jobs = 1, const std::vector<OptimizerConfig>& grid = standard_grid(),
                             unsigned retries = 0);

/// Best grid point by validation AUC; ties break toward lower validation loss,
/// then grid order. Failed runs are excluded; all-failed throws.
inline std::size_t pick_best_entry(const std::vector<GridEntry>& entries) {
    std::size_t best = entries.size();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].result.failed) continue;
        if (best == entries.size()) {
            best = i;
            continue;
        }
        const auto& a = entries[i].result;
        const auto& b = entries[best].result;
        if (a.val_auc > b.val_auc || (a.val_auc == b.val_auc && a.best_val_loss < b.best_val_loss)) best = i;
    }
    if (best == entries.size()) throw Error("grid search: every run failed");
    return best;
}

inline GridEntry grid_search(const std::string& appliance, ModelKind model, const DatasetSplits& data,
                             std::size_t iterations, std::size_t batch_size, std::uint64_t seed,
                             unsigned jobs, const std::vector<OptimizerConfig>& grid, unsigned retries) {
    auto entries = run_grid(appliance, model, data, iterations, batch_size, seed, jobs, grid, retries);
    return entries[pick_best_entry(entries)];
}

// ---------------------------------------------------------------------------
// Model selection
// ---------------------------------------------------------------------------

struct SelectionEntry {
    ModelKind model = ModelKind::autoencoder;
    double val_auc = 0.0;
    double best_val_loss = std::numeric_limits<double>::infinity();
};

/// Argmax-AUC over the per-model table; ties break toward lower validation
/// loss, then listed order.
inline ModelKind select_best_model(const std::vector<SelectionEntry>& table) {
    if (table.empty()) throw ValidationError("select_best_model: empty table");
    std::size_t best = 0;
    for (std::size_t i = 1; i < table.size(); ++i) {
        if (table[i].val_auc > table[best].val_auc ||
            (table[i].val_auc == table[best].val_auc && table[i].best_val_loss < table[best].best_val_loss))
            best = i;
    }
    return table[best].model;
}

/// One run-ledger record (serialized as JSON lines by the CLI).
struct RunRecord {
    std::string appliance;
    std::string model;
    std::string optimizer;
    double learning_rate = 0.0;
    std::uint64_t seed = 0;
    std::size_t best_iteration = 0;
    double best_val_loss = 0.0;
    double val_auc = 0.0;
    bool failed = false;
    std::string weights_path;
};

}  // namespace nilm
