#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "nilm/dataset.hpp"
#include "nilm/error.hpp"
#include "nilm/series.hpp"

namespace nilm {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::size_t total() const { return tp + fp + tn + fn; }
};

struct ClassificationMetrics {
    double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
    ConfusionCounts counts;
};

/// accuracy / precision / recall / F1; ratios with a zero denominator are 0.
inline ClassificationMetrics classification_metrics(const std::vector<std::uint8_t>& pred,
                                                    const std::vector<std::uint8_t>& truth) {
    if (pred.size() != truth.size()) throw ValidationError("classification_metrics: length mismatch");
    ClassificationMetrics m;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] && truth[i]) ++m.counts.tp;
        else if (pred[i] && !truth[i]) ++m.counts.fp;
        else if (!pred[i] && truth[i]) ++m.counts.fn;
        else ++m.counts.tn;
    }
    auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
    m.accuracy = ratio(static_cast<double>(m.counts.tp + m.counts.tn), static_cast<double>(m.counts.total()));
    m.precision = ratio(static_cast<double>(m.counts.tp), static_cast<double>(m.counts.tp + m.counts.fp));
    m.recall = ratio(static_cast<double>(m.counts.tp), static_cast<double>(m.counts.tp + m.counts.fn));
    m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
    return m;
}

struct RegressionMetrics {
    double mae = 0.0;
    double reite = 0.0;
    double energy_pred = 0.0;  // Ws
    double energy_true = 0.0;
    std::size_t n = 0;
};

/// MAE plus relative error in total energy |E_hat - E| / max(E_hat, E).
/// Both zero energies give REITE 0.
inline RegressionMetrics regression_metrics(std::span<const double> pred, std::span<const double> truth,
                                            double period = kCanonicalPeriodS) {
    if (pred.size() != truth.size()) throw ValidationError("regression_metrics: length mismatch");
    if (pred.empty()) throw ValidationError("regression_metrics: empty input");
    RegressionMetrics m;
    m.n = pred.size();
    double abs_acc = 0.0, ep = 0.0, et = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        abs_acc += std::abs(pred[i] - truth[i]);
        ep += pred[i];
        et += truth[i];
    }
    m.mae = abs_acc / static_cast<double>(m.n);
    m.energy_pred = ep * period;
    m.energy_true = et * period;
    double denom = std::max(std::abs(m.energy_pred), std::abs(m.energy_true));
    m.reite = denom > 0.0 ? std::abs(m.energy_pred - m.energy_true) / denom : 0.0;
    return m;
}

// ---------------------------------------------------------------------------
// ROC / AUC
// ---------------------------------------------------------------------------

struct RocPoint {
    double fpr = 0.0, tpr = 0.0, threshold = 0.0;
};

struct RocResult {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

/// Threshold sweep over the unique scores (predict positive when score >=
/// threshold), trapezoid AUC. Equals the Mann-Whitney statistic
/// P(s+ > s-) + P(s+ = s-)/2.
inline RocResult roc_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
    if (scores.size() != labels.size()) throw ValidationError("roc_auc: length mismatch");
    std::size_t n_pos = 0;
    for (auto l : labels) n_pos += l ? 1 : 0;
    std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw ValidationError("roc_auc: both classes must be present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
    });

    RocResult out;
    out.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::size_t tp = 0, fp = 0;
    double auc2 = 0.0;  // 2x trapezoid area, accumulated exactly over tie groups
    std::size_t i = 0;
    while (i < order.size()) {
        double s = scores[order[i]];
        std::size_t tp0 = tp, fp0 = fp;
        while (i < order.size() && scores[order[i]] == s) {
            if (labels[order[i]]) ++tp;
            else ++fp;
            ++i;
        }
        auc2 += static_cast<double>(fp - fp0) * static_cast<double>(tp + tp0);
        out.points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                              static_cast<double>(tp) / static_cast<double>(n_pos), s});
    }
    out.auc = auc2 / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
    return out;
}

/// Threshold from the midpoints between sorted unique validation scores that
/// maximizes F1 under the strict rule `positive iff score > threshold`; ties
/// take the lowest threshold.
inline double choose_threshold_max_f1(const std::vector<double>& scores,
                                      const std::vector<std::uint8_t>& labels) {
    if (scores.size() != labels.size()) throw ValidationError("choose_threshold_max_f1: length mismatch");
    bool any_pos = false, any_neg = false;
    for (auto l : labels) (l ? any_pos : any_neg) = true;
    if (!any_pos || !any_neg) throw ValidationError("choose_threshold_max_f1: both classes must be present");

    std::vector<double> uniq = scores;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() == 1) return uniq[0];

    double best_t = 0.0, best_f1 = -1.0;
    for (std::size_t i = 0; i + 1 < uniq.size(); ++i) {
        double t = 0.5 * (uniq[i] + uniq[i + 1]);
        std::vector<std::uint8_t> pred(scores.size());
        for (std::size_t k = 0; k < scores.size(); ++k) pred[k] = scores[k] > t ? 1 : 0;
        double f1 = classification_metrics(pred, labels).f1;
        if (f1 > best_f1 + 1e-15) {
            best_f1 = f1;
            best_t = t;
        }
    }
    return best_t;
}

// ---------------------------------------------------------------------------
// Window scoring
// ---------------------------------------------------------------------------

/// Score of one predicted window: its maximum, in watts.
inline double window_score(std::span<const double> predicted_window_watts) {
    double m = 0.0;
    bool first = true;
    for (double v : predicted_window_watts) {
        if (first || v > m) m = v;
        first = false;
    }
    return m;
}

/// Rasterizes a rectangles-family prediction onto a window-length series.
inline std::vector<double> rasterize_rectangle(double start_frac, double end_frac, double mean_power_w,
                                               std::size_t window) {
    std::vector<double> out(window, 0.0);
    if (!(end_frac > start_frac)) return out;
    auto lo = static_cast<std::int64_t>(std::floor(start_frac * static_cast<double>(window)));
    auto hi = static_cast<std::int64_t>(std::ceil(end_frac * static_cast<double>(window)));
    lo = std::clamp<std::int64_t>(lo, 0, static_cast<std::int64_t>(window));
    hi = std::clamp<std::int64_t>(hi, 0, static_cast<std::int64_t>(window));
    for (std::int64_t t = lo; t < hi; ++t) out[static_cast<std::size_t>(t)] = mean_power_w;
    return out;
}

// ---------------------------------------------------------------------------
// Rolling-window disaggregation
// ---------------------------------------------------------------------------

struct RollingConfig {
    std::size_t window = 0;
    double mean_activation_samples = 0.0;  // 'a', from the train+val activations

    double correction_factor() const {
        double w = static_cast<double>(window);
        if (2.0 * mean_activation_samples >= w)
            throw ValidationError("rolling correction requires 2a < w");
        return w / (w - 2.0 * mean_activation_samples);
    }
};

/// Predicts whole windows for a batch of input offsets. Inputs are raw
/// (unstandardized) windows, channels time-major; outputs are watt series of
/// window length.
using BatchWindowPredictor = std::function<std::vector<std::vector<double>>(
    const std::vector<std::vector<float>>& inputs)>;

namespace detail {

inline std::vector<float> window_inputs_from_channels(const std::vector<std::vector<double>>& channels,
                                                      std::size_t offset, std::size_t window) {
    const std::size_t c = channels.size();
    std::vector<float> out(window * c);
    for (std::size_t t = 0; t < window; ++t)
        for (std::size_t ch = 0; ch < c; ++ch)
            out[t * c + ch] = static_cast<float>(channels[ch][offset + t]);
    return out;
}

}  // namespace detail

/// Stride-1 rolling prediction: every offset is forwarded, each timestamp
/// averages all estimates that cover it, and the average is scaled by
/// w / (w - 2a). Series edges average over however many estimates exist there.
inline std::vector<double> rolling_window_predict(const std::vector<std::vector<double>>& channels,
                                                  const RollingConfig& cfg,
                                                  const BatchWindowPredictor& predict,
                                                  std::size_t batch_size = 64) {
    if (channels.empty()) throw ValidationError("rolling_window_predict: no channels");
    const std::size_t n = channels[0].size();
    const std::size_t w = cfg.window;
    if (n < w) throw ValidationError("rolling_window_predict: series shorter than the window");
    const double factor = cfg.correction_factor();

    std::vector<double> sums(n, 0.0);
    std::vector<std::uint32_t> counts(n, 0);
    const std::size_t n_offsets = n - w + 1;
    for (std::size_t base = 0; base < n_offsets; base += batch_size) {
        std::size_t b = std::min(batch_size, n_offsets - base);
        std::vector<std::vector<float>> inputs(b);
        for (std::size_t k = 0; k < b; ++k)
            inputs[k] = detail::window_inputs_from_channels(channels, base + k, w);
        std::vector<std::vector<double>> outputs = predict(inputs);
        if (outputs.size() != b) throw Error("rolling_window_predict: predictor batch size mismatch");
        for (std::size_t k = 0; k < b; ++k) {
            if (outputs[k].size() != w) throw Error("rolling_window_predict: predictor window length mismatch");
            for (std::size_t t = 0; t < w; ++t) {
                sums[base + k + t] += outputs[k][t];
                counts[base + k + t] += 1;
            }
        }
    }
    std::vector<double> out(n, 0.0);
    for (std::size_t t = 0; t < n; ++t)
        if (counts[t] > 0) out[t] = factor * sums[t] / static_cast<double>(counts[t]);
    return out;
}

inline PowerSeries rolling_window_predict(const PowerSeries& aggregate, const RollingConfig& cfg,
                                          const BatchWindowPredictor& predict, std::size_t batch_size = 64) {
    PowerSeries out;
    out.start_time = aggregate.start_time;
    out.period = aggregate.period;
    out.values = rolling_window_predict({aggregate.values}, cfg, predict, batch_size);
    return out;
}

inline PowerSeries rolling_window_predict(const MultivariateSeries& aggregate, const RollingConfig& cfg,
                                          const BatchWindowPredictor& predict, std::size_t batch_size = 64) {
    aggregate.validate();
    std::vector<std::vector<double>> channels;
    for (const auto& name : kHfChannelNames) {
        int idx = aggregate.channel_index(name);
        if (idx < 0) throw ValidationError("rolling_window_predict: missing channel " + name);
        channels.push_back(aggregate.channels[static_cast<std::size_t>(idx)]);
    }
    PowerSeries out;
    out.start_time = aggregate.start_time;
    out.period = aggregate.period;
    out.values = rolling_window_predict(channels, cfg, predict, batch_size);
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation reports and procedures
// ---------------------------------------------------------------------------

struct EvalReport {
    std::string appliance;
    std::string procedure;  // "activations" | "rolling"
    double mae = 0.0;
    double reite = 0.0;
    double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
    ConfusionCounts counts;
    double auc = 0.0;
    std::vector<RocPoint> roc;
    double threshold_w = 0.0;
    std::size_t n_points = 0;
    double energy_pred = 0.0;
    double energy_true = 0.0;
    double created_unix_s = 0.0;
};

/// The "activations" procedure: per-window max scores against the
/// contains-a-full-activation flag; classification at the given threshold.
inline EvalReport evaluate_activations(const SampleSet& windows, const BatchWindowPredictor& predict,
                                       double threshold_w, double period = kCanonicalPeriodS,
                                       std::size_t batch_size = 64) {
    if (windows.samples.empty()) throw ValidationError("evaluate_activations: empty window set");
    EvalReport report;
    report.procedure = "activations";
    report.threshold_w = threshold_w;

    std::vector<double> scores;
    std::vector<std::uint8_t> labels, pred_labels;
    std::vector<double> all_pred, all_true;
    scores.reserve(windows.samples.size());
    for (std::size_t base = 0; base < windows.samples.size(); base += batch_size) {
        std::size_t b = std::min(batch_size, windows.samples.size() - base);
        std::vector<std::vector<float>> inputs(b);
        for (std::size_t k = 0; k < b; ++k) inputs[k] = windows.samples[base + k].input;
        auto outputs = predict(inputs);
        for (std::size_t k = 0; k < b; ++k) {
            const Sample& s = windows.samples[base + k];
            double sc = window_score(outputs[k]);
            scores.push_back(sc);
            labels.push_back(s.has_activation);
            pred_labels.push_back(sc > threshold_w ? 1 : 0);
            for (std::size_t t = 0; t < windows.window; ++t) {
                all_pred.push_back(outputs[k][t]);
                all_true.push_back(s.target_power[t]);
            }
        }
    }

    auto roc = roc_auc(scores, labels);
    report.auc = roc.auc;
    report.roc = roc.points;
    auto cm = classification_metrics(pred_labels, labels);
    report.accuracy = cm.accuracy;
    report.precision = cm.precision;
    report.recall = cm.recall;
    report.f1 = cm.f1;
    report.counts = cm.counts;
    auto rm = regression_metrics(all_pred, all_true, period);
    report.mae = rm.mae;
    report.reite = rm.reite;
    report.energy_pred = rm.energy_pred;
    report.energy_true = rm.energy_true;
    report.n_points = rm.n;
    return report;
}

/// Per-window scores of a window set (validation), for threshold selection.
inline std::pair<std::vector<double>, std::vector<std::uint8_t>> score_windows(
    const SampleSet& windows, const BatchWindowPredictor& predict, std::size_t batch_size = 64) {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    for (std::size_t base = 0; base < windows.samples.size(); base += batch_size) {
        std::size_t b = std::min(batch_size, windows.samples.size() - base);
        std::vector<std::vector<float>> inputs(b);
        for (std::size_t k = 0; k < b; ++k) inputs[k] = windows.samples[base + k].input;
        auto outputs = predict(inputs);
        for (std::size_t k = 0; k < b; ++k) {
            scores.push_back(window_score(outputs[k]));
            labels.push_back(windows.samples[base + k].has_activation);
        }
    }
    return {scores, labels};
}

/// The "rolling window" procedure: regression metrics over every point, then
/// classification over non-overlapping windows of length w. A window's truth
/// label is whether it fully contains an activation.
inline EvalReport evaluate_rolling(const PowerSeries& predicted, const PowerSeries& truth,
                                   std::size_t window, double threshold_w,
                                   const ActivationParams& params) {
    if (predicted.size() != truth.size() || std::abs(predicted.period - truth.period) > 1e-9 ||
        std::abs(predicted.start_time - truth.start_time) > 1e-6)
        throw ValidationError("evaluate_rolling: series grids do not match");

    EvalReport report;
    report.procedure = "rolling";
    report.threshold_w = threshold_w;

    auto rm = regression_metrics(predicted.values, truth.values, truth.period);
    report.mae = rm.mae;
    report.reite = rm.reite;
    report.energy_pred = rm.energy_pred;
    report.energy_true = rm.energy_true;
    report.n_points = rm.n;

    auto acts = extract_activations(truth, params);
    const std::size_t n_windows = truth.size() / window;
    std::vector<std::uint8_t> pred_labels(n_windows), truth_labels(n_windows, 0);
    for (const auto& a : acts) {
        std::size_t wi = a.start / window;
        if (wi < n_windows && a.start >= wi * window && a.end <= (wi + 1) * window) truth_labels[wi] = 1;
    }
    for (std::size_t wi = 0; wi < n_windows; ++wi) {
        double m = window_score(std::span<const double>(predicted.values.data() + wi * window, window));
        pred_labels[wi] = m > threshold_w ? 1 : 0;
    }
    auto cm = classification_metrics(pred_labels, truth_labels);
    report.accuracy = cm.accuracy;
    report.precision = cm.precision;
    report.recall = cm.recall;
    report.f1 = cm.f1;
    report.counts = cm.counts;
    return report;
}

}  // namespace nilm
