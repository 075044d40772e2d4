#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nilm/error.hpp"
#include "nilm/rng.hpp"
#include "nilm/series.hpp"

namespace nilm {

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

struct ActivationParams {
    double on_power_threshold_w = 0.0;
    double min_on_s = 0.0;
    double max_on_s = 0.0;
    std::size_t border_samples = 0;
    double merge_gap_s = 30.0;  // below-threshold gaps up to this long are bridged

    void validate() const {
        if (on_power_threshold_w <= 0) throw ValidationError("on-power threshold must be positive");
        if (min_on_s <= 0 || min_on_s > max_on_s) throw ValidationError("need 0 < min_on <= max_on");
    }
};

/// Defaults per appliance. The window border keeps full activations placeable
/// inside the canonical window; it is zero where max_on already equals the
/// window length.
inline ActivationParams default_activation_params(const std::string& appliance) {
    if (appliance == "kettle") return {2000.0, 12.0, 300.0, 5};
    if (appliance == "fridge") return {50.0, 60.0, 3600.0, 0};
    if (appliance == "washing") return {20.0, 1800.0, 10800.0, 0};
    if (appliance == "microwave") return {200.0, 12.0, 300.0, 5};
    if (appliance == "dishwasher") return {10.0, 1800.0, 9000.0, 0};
    throw ValidationError("unknown appliance name: " + appliance);
}

/// One appliance run: [start, end) on its source series' grid plus the observed
/// power slice.
struct Activation {
    std::size_t start = 0;
    std::size_t end = 0;  // exclusive
    std::vector<double> power;
    std::string source_id;

    std::size_t length() const { return end - start; }
};

/// Maximal above-threshold runs, bridged across short below-threshold gaps,
/// filtered to [min_on, max_on].
inline std::vector<Activation> extract_activations(const PowerSeries& series, const ActivationParams& p,
                                                   const std::string& source_id = "") {
    p.validate();
    const auto& v = series.values;
    const double period = series.period;
    const std::size_t n = v.size();

    std::vector<std::pair<std::size_t, std::size_t>> runs;
    std::size_t i = 0;
    while (i < n) {
        if (v[i] > p.on_power_threshold_w) {
            std::size_t j = i + 1;
            while (j < n && v[j] > p.on_power_threshold_w) ++j;
            runs.emplace_back(i, j);
            i = j;
        } else {
            ++i;
        }
    }

    std::vector<std::pair<std::size_t, std::size_t>> merged;
    for (const auto& r : runs) {
        if (!merged.empty() &&
            static_cast<double>(r.first - merged.back().second) * period <= p.merge_gap_s) {
            merged.back().second = r.second;
        } else {
            merged.push_back(r);
        }
    }

    std::vector<Activation> out;
    for (const auto& r : merged) {
        double duration = static_cast<double>(r.second - r.first) * period;
        if (duration < p.min_on_s || duration > p.max_on_s) continue;
        Activation a;
        a.start = r.first;
        a.end = r.second;
        a.power.assign(v.begin() + static_cast<std::ptrdiff_t>(r.first),
                       v.begin() + static_cast<std::ptrdiff_t>(r.second));
        a.source_id = source_id;
        out.push_back(std::move(a));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Non-activation window sampling
// ---------------------------------------------------------------------------

namespace detail {

// A window counts as a non-activation candidate when it lies entirely inside
// a gap between consecutive activations (series edges act as boundaries).
inline std::vector<std::pair<std::size_t, std::size_t>> activation_gaps(
    std::size_t series_len, const std::vector<Activation>& acts) {
    std::vector<std::pair<std::size_t, std::size_t>> gaps;
    std::size_t cursor = 0;
    std::vector<std::pair<std::size_t, std::size_t>> sorted;
    sorted.reserve(acts.size());
    for (const auto& a : acts) sorted.emplace_back(a.start, a.end);
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [s, e] : sorted) {
        if (s > cursor) gaps.emplace_back(cursor, s);
        cursor = std::max(cursor, e);
    }
    if (cursor < series_len) gaps.emplace_back(cursor, series_len);
    return gaps;
}

}  // namespace detail

inline std::size_t non_activation_offset_count(std::size_t series_len,
                                               const std::vector<Activation>& acts, std::size_t window) {
    std::size_t count = 0;
    for (const auto& [g0, g1] : detail::activation_gaps(series_len, acts))
        if (g1 - g0 >= window) count += g1 - g0 - window + 1;
    return count;
}

inline std::size_t nth_non_activation_offset(std::size_t series_len, const std::vector<Activation>& acts,
                                             std::size_t window, std::size_t n) {
    for (const auto& [g0, g1] : detail::activation_gaps(series_len, acts)) {
        if (g1 - g0 < window) continue;
        std::size_t here = g1 - g0 - window + 1;
        if (n < here) return g0 + n;
        n -= here;
    }
    throw Error("nth_non_activation_offset: index out of range");
}

/// Uniformly random window offset lying between activations.
inline std::size_t sample_non_activation(std::size_t series_len, const std::vector<Activation>& acts,
                                         std::size_t window, Rng& rng) {
    std::size_t total = non_activation_offset_count(series_len, acts, window);
    if (total == 0) throw ValidationError("no activation-free window of the requested size exists");
    return nth_non_activation_offset(series_len, acts, window, rng.uniform_index(total));
}

// ---------------------------------------------------------------------------
// Synthetic aggregation
// ---------------------------------------------------------------------------

struct SynthesisConfig {
    double p = 0.4;  // probability of adding each distractor appliance
    std::vector<std::vector<Activation>> distractor_pools;

    void validate() const {
        if (p < 0.0 || p > 1.0) throw ValidationError("distractor probability must lie in [0, 1]");
    }
};

struct SynthesizedWindow {
    std::vector<double> aggregate;
    std::vector<double> target_power;  // target placed on zeros; all-zero without a target
    std::size_t target_start = 0;
    std::size_t target_end = 0;
    bool has_target = false;
};

/// Builds one synthetic aggregate window: the target activation (if any) at a
/// uniformly random in-window position respecting the border, plus, per
/// distractor pool, one randomly placed activation with probability p
/// (clipped at the window edges). Randomness is consumed in a fixed order:
/// target position first, then per pool the inclusion draw, the pool index,
/// and the placement.
inline SynthesizedWindow synthesize_aggregate(const Activation* target, const SynthesisConfig& cfg,
                                              std::size_t window, std::size_t border, Rng& rng) {
    cfg.validate();
    SynthesizedWindow out;
    out.aggregate.assign(window, 0.0);
    out.target_power.assign(window, 0.0);

    if (target != nullptr) {
        std::size_t len = target->length();
        if (len > window) throw ValidationError("target activation longer than the window");
        if (len + 2 * border > window)
            throw ValidationError("target activation does not fit in the window with the border");
        std::size_t q = border + rng.uniform_index(window - 2 * border - len + 1);
        for (std::size_t k = 0; k < len; ++k) {
            out.aggregate[q + k] += target->power[k];
            out.target_power[q + k] = target->power[k];
        }
        out.target_start = q;
        out.target_end = q + len;
        out.has_target = true;
    }

    for (const auto& pool : cfg.distractor_pools) {
        if (pool.empty()) continue;
        if (!rng.bernoulli(cfg.p)) continue;
        const Activation& d = pool[rng.uniform_index(pool.size())];
        std::size_t len = d.length();
        // any overlap amount is possible; hanging ends are clipped
        std::size_t positions = window + len - 1;
        std::int64_t off = static_cast<std::int64_t>(rng.uniform_index(positions)) -
                           static_cast<std::int64_t>(len - 1);
        for (std::size_t k = 0; k < len; ++k) {
            std::int64_t t = off + static_cast<std::int64_t>(k);
            if (t < 0 || t >= static_cast<std::int64_t>(window)) continue;
            out.aggregate[static_cast<std::size_t>(t)] += d.power[k];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Samples and normalization
// ---------------------------------------------------------------------------

/// One (input window, target) pair. Inputs and targets are stored in raw watts;
/// standardization/scaling is applied at training time from NormStats.
struct Sample {
    std::vector<float> input;         // window * channels, time-major
    std::vector<float> target_power;  // window, watts
    float start_frac = 0.0f;
    float end_frac = 0.0f;
    float mean_power_w = 0.0f;
    std::uint8_t has_activation = 0;
    std::uint8_t synthetic = 0;
};

struct SampleSet {
    std::size_t window = 0;
    std::size_t channels = 1;
    std::vector<Sample> samples;

    std::size_t size() const { return samples.size(); }
};

struct NormStats {
    std::vector<double> sigma_input;  // per input channel
    double max_target = 0.0;

    void validate() const {
        for (double s : sigma_input)
            if (!(s > 0.0)) throw Error("sigma_input = 0");
        if (!(max_target > 0.0)) throw Error("max_target = 0");
    }
};

/// sigma_input = per-channel mean of the training windows' own (population)
/// standard deviations; max_target = maximum training target power.
inline NormStats compute_norm_stats(const SampleSet& train) {
    if (train.samples.empty()) throw ValidationError("compute_norm_stats: empty training set");
    const std::size_t w = train.window, c = train.channels;
    NormStats stats;
    stats.sigma_input.assign(c, 0.0);
    for (const auto& s : train.samples) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            double mean = 0.0;
            for (std::size_t t = 0; t < w; ++t) mean += s.input[t * c + ch];
            mean /= static_cast<double>(w);
            double var = 0.0;
            for (std::size_t t = 0; t < w; ++t) {
                double d = s.input[t * c + ch] - mean;
                var += d * d;
            }
            stats.sigma_input[ch] += std::sqrt(var / static_cast<double>(w));
        }
        for (float v : s.target_power) stats.max_target = std::max(stats.max_target, static_cast<double>(v));
    }
    for (double& s : stats.sigma_input) s /= static_cast<double>(train.samples.size());
    stats.validate();
    return stats;
}

/// Subtracts the window's own per-channel mean and divides by sigma_input.
inline void preprocess_input(std::span<const float> input, std::size_t window, std::size_t channels,
                             const NormStats& stats, float* out) {
    for (std::size_t ch = 0; ch < channels; ++ch) {
        double mean = 0.0;
        for (std::size_t t = 0; t < window; ++t) mean += input[t * channels + ch];
        mean /= static_cast<double>(window);
        double inv_sigma = 1.0 / stats.sigma_input[ch];
        for (std::size_t t = 0; t < window; ++t)
            out[t * channels + ch] = static_cast<float>((input[t * channels + ch] - mean) * inv_sigma);
    }
}

inline double scale_target(double watts, const NormStats& stats) { return watts / stats.max_target; }
inline double unscale_output(double scaled, const NormStats& stats) { return scaled * stats.max_target; }

// ---------------------------------------------------------------------------
// Segment-aligned window lookup
// ---------------------------------------------------------------------------

/// Maps an absolute time range onto one of a set of contiguous segments.
template <typename SeriesT>
class SegmentedSeries {
public:
    explicit SegmentedSeries(const std::vector<SeriesT>* segments = nullptr) : segments_(segments) {}

    bool empty() const { return segments_ == nullptr || segments_->empty(); }

    /// Returns (segment index, offset) such that the window of `length` samples
    /// starting at absolute time t lies inside one segment on-grid.
    std::optional<std::pair<std::size_t, std::size_t>> locate(double t, std::size_t length) const {
        if (empty()) return std::nullopt;
        for (std::size_t s = 0; s < segments_->size(); ++s) {
            const auto& seg = (*segments_)[s];
            double pos = (t - seg.start_time) / seg.period;
            double rounded = std::round(pos);
            if (std::abs(pos - rounded) > 1e-3) continue;  // sub-period offsets snap to the grid
            if (rounded < 0) continue;
            auto off = static_cast<std::size_t>(rounded);
            if (off + length > seg.size()) continue;
            return std::make_pair(s, off);
        }
        return std::nullopt;
    }

    const SeriesT& segment(std::size_t i) const { return (*segments_)[i]; }

private:
    const std::vector<SeriesT>* segments_;
};

// ---------------------------------------------------------------------------
// Split construction
// ---------------------------------------------------------------------------

struct HouseData {
    std::string name;
    std::vector<PowerSeries> aggregate;            // low-frequency variants
    std::vector<MultivariateSeries> aggregate_hf;  // high-frequency variant
    std::vector<PowerSeries> submeter;             // the target appliance
};

struct BuildConfig {
    std::string appliance;
    ActivationParams params;
    std::size_t window = 0;
    std::size_t channels = 1;  // 1 (power) or 3 (power + hf features)
    bool synthetic = false;
    double synth_ratio = 1.0;  // synthetic samples added per real training sample
    SynthesisConfig synthesis;
    std::string test_house;
    double test2_days = 14.0;
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
};

struct DatasetSplits {
    std::string appliance;
    std::string variant;  // "lf", "lf_syn", "hf"
    std::size_t window = 0;
    std::size_t channels = 1;
    ActivationParams params;
    std::uint64_t seed = 0;
    SampleSet train, val, test1, test2;
    NormStats norm;
    double mean_activation_samples = 0.0;  // 'a' for the rolling-window correction
};

namespace detail {

inline bool fill_input_window(const HouseData& house, std::size_t channels, double t_start,
                              std::size_t window, std::vector<float>& out) {
    out.resize(window * channels);
    if (channels == 1) {
        SegmentedSeries<PowerSeries> agg(&house.aggregate);
        auto loc = agg.locate(t_start, window);
        if (!loc) return false;
        const auto& seg = agg.segment(loc->first);
        for (std::size_t t = 0; t < window; ++t)
            out[t] = static_cast<float>(seg.values[loc->second + t]);
        return true;
    }
    SegmentedSeries<MultivariateSeries> agg(&house.aggregate_hf);
    auto loc = agg.locate(t_start, window);
    if (!loc) return false;
    const auto& seg = agg.segment(loc->first);
    int pw = seg.channel_index("power_w");
    int ff = seg.channel_index("form_factor");
    int ph = seg.channel_index("phase_shift_rad");
    if (pw < 0 || ff < 0 || ph < 0) return false;
    for (std::size_t t = 0; t < window; ++t) {
        out[t * 3 + 0] = static_cast<float>(seg.channels[static_cast<std::size_t>(pw)][loc->second + t]);
        out[t * 3 + 1] = static_cast<float>(seg.channels[static_cast<std::size_t>(ff)][loc->second + t]);
        out[t * 3 + 2] = static_cast<float>(seg.channels[static_cast<std::size_t>(ph)][loc->second + t]);
    }
    return true;
}

struct RegionSamples {
    std::vector<Sample> positives;
    std::vector<Sample> negatives;
    std::vector<std::size_t> activation_lengths;
};

// Builds balanced activation / non-activation windows over one list of
// submeter segments, reading inputs from the house's aggregate channels.
inline RegionSamples build_region_samples(const HouseData& house,
                                          const std::vector<PowerSeries>& submeter,
                                          const BuildConfig& cfg, Rng& rng) {
    RegionSamples out;
    const std::size_t w = cfg.window;
    for (const auto& seg : submeter) {
        std::vector<Activation> acts = extract_activations(seg, cfg.params, house.name);
        std::size_t placed = 0;
        for (const auto& act : acts) {
            out.activation_lengths.push_back(act.length());
            std::size_t len = act.length();
            if (len + 2 * cfg.params.border_samples > w) continue;
            std::int64_t q_lo = static_cast<std::int64_t>(cfg.params.border_samples);
            q_lo = std::max(q_lo, static_cast<std::int64_t>(act.start) + static_cast<std::int64_t>(w) -
                                      static_cast<std::int64_t>(seg.size()));
            std::int64_t q_hi = std::min(static_cast<std::int64_t>(w - cfg.params.border_samples - len),
                                         static_cast<std::int64_t>(act.start));
            if (q_lo > q_hi) continue;
            std::size_t q = static_cast<std::size_t>(q_lo) +
                            rng.uniform_index(static_cast<std::size_t>(q_hi - q_lo) + 1);
            std::size_t wstart = act.start - q;

            Sample s;
            if (!fill_input_window(house, cfg.channels, seg.time_at(wstart), w, s.input)) continue;
            s.target_power.resize(w);
            for (std::size_t t = 0; t < w; ++t)
                s.target_power[t] = static_cast<float>(seg.values[wstart + t]);
            s.start_frac = static_cast<float>(static_cast<double>(q) / static_cast<double>(w));
            s.end_frac = static_cast<float>(static_cast<double>(q + len) / static_cast<double>(w));
            double mean_p = 0.0;
            for (double v : act.power) mean_p += v;
            s.mean_power_w = static_cast<float>(mean_p / static_cast<double>(len));
            s.has_activation = 1;
            out.positives.push_back(std::move(s));
            ++placed;
        }

        // negatives in equal proportion, drawn from between-activation gaps
        std::size_t feasible = non_activation_offset_count(seg.size(), acts, w);
        if (feasible == 0) continue;
        for (std::size_t k = 0; k < placed; ++k) {
            std::size_t off = nth_non_activation_offset(seg.size(), acts, w, rng.uniform_index(feasible));
            Sample s;
            if (!fill_input_window(house, cfg.channels, seg.time_at(off), w, s.input)) continue;
            s.target_power.resize(w);
            for (std::size_t t = 0; t < w; ++t)
                s.target_power[t] = static_cast<float>(seg.values[off + t]);
            s.has_activation = 0;
            out.negatives.push_back(std::move(s));
        }
    }
    return out;
}

// Cuts every segment of a house at an absolute time, returning (before, after).
inline std::pair<std::vector<PowerSeries>, std::vector<PowerSeries>> cut_at(
    const std::vector<PowerSeries>& segments, double t_cut) {
    std::vector<PowerSeries> before, after;
    for (const auto& seg : segments) {
        if (seg.end_time() <= t_cut) {
            before.push_back(seg);
        } else if (seg.start_time >= t_cut) {
            after.push_back(seg);
        } else {
            auto split_at = static_cast<std::size_t>(std::ceil((t_cut - seg.start_time) / seg.period));
            split_at = std::min(split_at, seg.size());
            if (split_at > 0) before.push_back(slice_series(seg, 0, split_at));
            if (split_at < seg.size()) after.push_back(slice_series(seg, split_at, seg.size() - split_at));
        }
    }
    return {before, after};
}

}  // namespace detail

/// Builds the four sets: the designated house entirely -> test I; the last
/// test2_days of every remaining house -> test II; the rest becomes balanced
/// activation/non-activation samples split train_fraction / rest by sample.
inline DatasetSplits build_splits(const std::vector<HouseData>& houses, const BuildConfig& cfg) {
    if (houses.size() < 2) throw ValidationError("build_splits: need at least 2 houses");
    if (cfg.window == 0) throw ValidationError("build_splits: window not set");
    cfg.params.validate();
    const HouseData* test_house = nullptr;
    for (const auto& h : houses)
        if (h.name == cfg.test_house) test_house = &h;
    if (!test_house) throw ValidationError("build_splits: test house '" + cfg.test_house + "' not found");

    DatasetSplits ds;
    ds.appliance = cfg.appliance;
    ds.variant = cfg.channels == 3 ? "hf" : (cfg.synthetic ? "lf_syn" : "lf");
    ds.window = cfg.window;
    ds.channels = cfg.channels;
    ds.params = cfg.params;
    ds.seed = cfg.seed;
    for (SampleSet* s : {&ds.train, &ds.val, &ds.test1, &ds.test2}) {
        s->window = cfg.window;
        s->channels = cfg.channels;
    }

    Rng rng_test1(derive_seed(cfg.seed, 101));
    auto t1 = detail::build_region_samples(*test_house, test_house->submeter, cfg, rng_test1);
    for (auto& s : t1.positives) ds.test1.samples.push_back(std::move(s));
    for (auto& s : t1.negatives) ds.test1.samples.push_back(std::move(s));

    std::vector<Sample> pool_pos, pool_neg;
    std::vector<std::size_t> act_lengths;
    std::size_t house_idx = 0;
    for (const auto& house : houses) {
        ++house_idx;
        if (&house == test_house) continue;
        double end_time = 0.0;
        for (const auto& seg : house.submeter) end_time = std::max(end_time, seg.end_time());
        double t_cut = end_time - cfg.test2_days * 86400.0;

        auto [sub_trainval, sub_test2] = detail::cut_at(house.submeter, t_cut);

        Rng rng_t2(derive_seed(cfg.seed, 200 + house_idx));
        auto t2 = detail::build_region_samples(house, sub_test2, cfg, rng_t2);
        for (auto& s : t2.positives) ds.test2.samples.push_back(std::move(s));
        for (auto& s : t2.negatives) ds.test2.samples.push_back(std::move(s));

        Rng rng_tv(derive_seed(cfg.seed, 300 + house_idx));
        auto tv = detail::build_region_samples(house, sub_trainval, cfg, rng_tv);
        for (auto& s : tv.positives) pool_pos.push_back(std::move(s));
        for (auto& s : tv.negatives) pool_neg.push_back(std::move(s));
        act_lengths.insert(act_lengths.end(), tv.activation_lengths.begin(), tv.activation_lengths.end());
    }

    if (pool_pos.empty()) throw ValidationError("build_splits: no activations in the training region");
    std::size_t balanced = std::min(pool_pos.size(), pool_neg.size());
    pool_pos.resize(balanced);
    pool_neg.resize(balanced);

    std::vector<Sample> pool;
    pool.reserve(2 * balanced);
    for (auto& s : pool_pos) pool.push_back(std::move(s));
    for (auto& s : pool_neg) pool.push_back(std::move(s));
    Rng rng_split(derive_seed(cfg.seed, 400));
    rng_split.shuffle(pool);
    auto n_train = static_cast<std::size_t>(
        std::lround(cfg.train_fraction * static_cast<double>(pool.size())));
    n_train = std::min(n_train, pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
        (i < n_train ? ds.train : ds.val).samples.push_back(std::move(pool[i]));
    if (ds.train.samples.empty() || ds.val.samples.empty())
        throw ValidationError("build_splits: insufficient data for a train/validation split");

    if (!act_lengths.empty()) {
        double acc = 0.0;
        for (std::size_t l : act_lengths) acc += static_cast<double>(l);
        ds.mean_activation_samples = std::round(acc / static_cast<double>(act_lengths.size()));
    }

    if (cfg.synthetic) {
        if (cfg.channels != 1)
            throw ValidationError("synthetic data cannot be constructed for multivariate series");
        // target activations for synthesis come from the training-region pool
        std::vector<Activation> targets;
        for (const auto& house : houses) {
            if (&house == test_house) continue;
            double end_time = 0.0;
            for (const auto& seg : house.submeter) end_time = std::max(end_time, seg.end_time());
            auto cut = detail::cut_at(house.submeter, end_time - cfg.test2_days * 86400.0);
            for (const auto& seg : cut.first) {
                auto acts = extract_activations(seg, cfg.params, house.name);
                for (auto& a : acts)
                    if (a.length() + 2 * cfg.params.border_samples <= cfg.window)
                        targets.push_back(std::move(a));
            }
        }
        Rng rng_syn(derive_seed(cfg.seed, 500));
        auto n_syn = static_cast<std::size_t>(
            std::lround(cfg.synth_ratio * static_cast<double>(ds.train.samples.size())));
        for (std::size_t k = 0; k < n_syn; ++k) {
            bool with_target = !targets.empty() && k % 2 == 0;
            const Activation* target =
                with_target ? &targets[rng_syn.uniform_index(targets.size())] : nullptr;
            auto synth = synthesize_aggregate(target, cfg.synthesis, cfg.window,
                                              cfg.params.border_samples, rng_syn);
            Sample s;
            s.input.resize(cfg.window);
            s.target_power.resize(cfg.window);
            for (std::size_t t = 0; t < cfg.window; ++t) {
                s.input[t] = static_cast<float>(synth.aggregate[t]);
                s.target_power[t] = static_cast<float>(synth.target_power[t]);
            }
            if (synth.has_target) {
                s.start_frac = static_cast<float>(static_cast<double>(synth.target_start) /
                                                  static_cast<double>(cfg.window));
                s.end_frac = static_cast<float>(static_cast<double>(synth.target_end) /
                                                static_cast<double>(cfg.window));
                double mean_p = 0.0;
                for (std::size_t t = synth.target_start; t < synth.target_end; ++t)
                    mean_p += synth.target_power[t];
                s.mean_power_w =
                    static_cast<float>(mean_p / static_cast<double>(synth.target_end - synth.target_start));
                s.has_activation = 1;
            }
            s.synthetic = 1;
            ds.train.samples.push_back(std::move(s));
        }
        Rng rng_mix(derive_seed(cfg.seed, 501));
        rng_mix.shuffle(ds.train.samples);
    }

    ds.norm = compute_norm_stats(ds.train);
    return ds;
}

}  // namespace nilm
