#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nilm/csv.hpp"
#include "nilm/error.hpp"

namespace nilm {

/// All ingested data is resampled onto this grid; every downstream module assumes it.
inline constexpr double kCanonicalPeriodS = 6.0;

/// Uniformly sampled active-power series. Timestamps are implicit
/// (start_time + i * period); series with gaps are split at ingestion,
/// so a PowerSeries is always contiguous.
struct PowerSeries {
    double start_time = 0.0;  // unix seconds
    double period = kCanonicalPeriodS;
    std::vector<double> values;  // watts

    std::size_t size() const { return values.size(); }
    double time_at(std::size_t i) const { return start_time + static_cast<double>(i) * period; }
    double end_time() const { return time_at(values.size()); }
};

/// Uniformly sampled multichannel series. The power channel is always present;
/// the high-frequency variant adds form_factor and phase_shift_rad.
struct MultivariateSeries {
    double start_time = 0.0;
    double period = kCanonicalPeriodS;
    std::vector<std::string> channel_names;
    std::vector<std::vector<double>> channels;

    std::size_t size() const { return channels.empty() ? 0 : channels[0].size(); }
    double time_at(std::size_t i) const { return start_time + static_cast<double>(i) * period; }

    int channel_index(const std::string& name) const {
        for (std::size_t c = 0; c < channel_names.size(); ++c)
            if (channel_names[c] == name) return static_cast<int>(c);
        return -1;
    }

    void validate() const {
        if (channel_names.size() != channels.size()) throw Error("channel name/data count mismatch");
        if (channel_index("power_w") < 0) throw Error("multivariate series must contain a power_w channel");
        for (std::size_t c = 1; c < channels.size(); ++c)
            if (channels[c].size() != channels[0].size()) throw Error("channel length mismatch");
        for (std::size_t c = 0; c < channel_names.size(); ++c)
            for (std::size_t k = c + 1; k < channel_names.size(); ++k)
                if (channel_names[c] == channel_names[k]) throw Error("duplicate channel name " + channel_names[c]);
    }
};

inline const std::vector<std::string> kHfChannelNames = {"power_w", "form_factor", "phase_shift_rad"};

/// Canonical window lengths. Per-appliance window sizes in minutes.
inline double window_minutes_for(const std::string& appliance) {
    if (appliance == "kettle") return 13.0;
    if (appliance == "fridge") return 60.0;
    if (appliance == "washing") return 180.0;
    if (appliance == "microwave") return 10.0;
    if (appliance == "dishwasher") return 150.0;
    throw ValidationError("unknown appliance name: " + appliance);
}

inline std::size_t window_length_samples(double window_minutes, double period) {
    if (period <= 0.0) throw ValidationError("period must be positive");
    double samples = window_minutes * 60.0 / period;
    double rounded = std::round(samples);
    if (std::abs(samples - rounded) > 1e-9)
        throw ValidationError("period does not divide the window evenly");
    return static_cast<std::size_t>(rounded);
}

inline std::size_t window_length_for(const std::string& appliance, double period) {
    return window_length_samples(window_minutes_for(appliance), period);
}

/// First-order hold upsampling: linear interpolation between consecutive source
/// samples evaluated on the finer grid. Source instants are preserved exactly.
inline PowerSeries resample_foh(const PowerSeries& src, double target_period) {
    if (target_period <= 0.0) throw ValidationError("target period must be positive");
    if (src.values.size() < 2) throw ValidationError("resample_foh needs at least 2 samples");
    if (target_period >= src.period) throw ValidationError("resample_foh only upsamples (target < source period)");

    const std::size_t n = src.values.size();
    const std::size_t n_out =
        static_cast<std::size_t>(std::floor((static_cast<double>(n - 1) * src.period) / target_period)) + 1;

    PowerSeries out;
    out.start_time = src.start_time;
    out.period = target_period;
    out.values.resize(n_out);
    for (std::size_t k = 0; k < n_out; ++k) {
        double pos = static_cast<double>(k) * target_period / src.period;
        auto i = static_cast<std::size_t>(std::floor(pos));
        if (i >= n - 1) i = n - 2;
        double frac = pos - static_cast<double>(i);
        if (frac < 1e-12) {
            out.values[k] = src.values[i];  // exact at source instants
        } else {
            out.values[k] = src.values[i] + frac * (src.values[i + 1] - src.values[i]);
        }
    }
    return out;
}

inline std::span<const double> slice_window(const PowerSeries& s, std::size_t offset, std::size_t length) {
    if (offset + length > s.values.size())
        throw ValidationError("slice_window out of range: offset " + std::to_string(offset) + " + length " +
                              std::to_string(length) + " > " + std::to_string(s.values.size()));
    return std::span<const double>(s.values.data() + offset, length);
}

inline PowerSeries slice_series(const PowerSeries& s, std::size_t offset, std::size_t length) {
    auto view = slice_window(s, offset, length);
    PowerSeries out;
    out.start_time = s.time_at(offset);
    out.period = s.period;
    out.values.assign(view.begin(), view.end());
    return out;
}

// ---------------------------------------------------------------------------
// File I/O. Low-frequency series: CSV `timestamp_unix_s,active_power_w`.
// Multivariate: CSV `timestamp_unix_s,active_power_w,form_factor,phase_shift_rad`.
// Gaps of exactly one sample are filled by first-order hold; longer gaps split
// the recording into separate contiguous series.
// ---------------------------------------------------------------------------

namespace detail {

inline double infer_period(const std::vector<double>& ts, const std::string& path) {
    if (ts.size() < 2) throw ValidationError(path + ": need at least 2 rows");
    std::vector<double> deltas;
    deltas.reserve(ts.size() - 1);
    for (std::size_t i = 1; i < ts.size(); ++i) {
        double d = ts[i] - ts[i - 1];
        if (d <= 0) throw ValidationError(path + ": timestamps not strictly increasing at row " + std::to_string(i + 2));
        deltas.push_back(d);
    }
    std::nth_element(deltas.begin(), deltas.begin() + deltas.size() / 2, deltas.end());
    return deltas[deltas.size() / 2];
}

}  // namespace detail

/// Loads a low-frequency power CSV and returns contiguous segments on the file's
/// native grid (callers resample to the canonical 6 s period as needed).
inline std::vector<PowerSeries> load_power_series_csv(const std::string& path) {
    NumericCsv csv = read_numeric_csv(path);
    if (csv.header.size() != 2 || csv.header[0] != "timestamp_unix_s" || csv.header[1] != "active_power_w")
        throw ValidationError(path + ": expected header timestamp_unix_s,active_power_w");
    if (csv.rows.empty()) throw ValidationError(path + ": no data rows");

    std::vector<double> ts(csv.rows.size());
    for (std::size_t i = 0; i < csv.rows.size(); ++i) ts[i] = csv.rows[i][0];
    double period = detail::infer_period(ts, path);
    double tol = period * 1e-3;  // tolerate timestamp rounding, e.g. 6 ms on the 6 s grid

    std::vector<PowerSeries> out;
    PowerSeries cur;
    cur.period = period;
    auto flush = [&]() {
        if (!cur.values.empty()) out.push_back(std::move(cur));
        cur = PowerSeries{};
        cur.period = period;
    };
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        double v = csv.rows[i][1];
        if (!std::isfinite(v)) throw ValidationError(path + ":" + std::to_string(i + 2) + ": non-finite power value");
        if (cur.values.empty()) {
            cur.start_time = ts[i];
            cur.values.push_back(v);
            continue;
        }
        double gap = ts[i] - (cur.start_time + static_cast<double>(cur.values.size() - 1) * period);
        if (std::abs(gap - period) <= tol) {
            cur.values.push_back(v);
        } else if (std::abs(gap - 2.0 * period) <= tol) {
            cur.values.push_back(0.5 * (cur.values.back() + v));  // single missing sample
            cur.values.push_back(v);
        } else {
            flush();
            cur.start_time = ts[i];
            cur.values.push_back(v);
        }
    }
    flush();
    return out;
}

inline void save_power_series_csv(const std::string& path, const PowerSeries& s) {
    CsvWriter w(path);
    w.header({"timestamp_unix_s", "active_power_w"});
    for (std::size_t i = 0; i < s.values.size(); ++i) w.row(std::vector<double>{s.time_at(i), s.values[i]});
}

inline std::vector<MultivariateSeries> load_multivariate_csv(const std::string& path) {
    NumericCsv csv = read_numeric_csv(path);
    std::vector<std::string> expect = {"timestamp_unix_s", "active_power_w", "form_factor", "phase_shift_rad"};
    if (csv.header != expect)
        throw ValidationError(path + ": expected header timestamp_unix_s,active_power_w,form_factor,phase_shift_rad");
    if (csv.rows.empty()) throw ValidationError(path + ": no data rows");

    std::vector<double> ts(csv.rows.size());
    for (std::size_t i = 0; i < csv.rows.size(); ++i) ts[i] = csv.rows[i][0];
    double period = detail::infer_period(ts, path);
    double tol = period * 1e-3;

    std::vector<MultivariateSeries> out;
    MultivariateSeries cur;
    auto reset = [&]() {
        cur = MultivariateSeries{};
        cur.period = period;
        cur.channel_names = kHfChannelNames;
        cur.channels.assign(3, {});
    };
    auto flush = [&]() {
        if (cur.size() > 0) out.push_back(std::move(cur));
        reset();
    };
    reset();
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        auto push = [&](std::size_t row, bool interpolate_with_next = false) {
            for (std::size_t c = 0; c < 3; ++c) {
                double v = csv.rows[row][c + 1];
                if (interpolate_with_next) v = 0.5 * (csv.rows[row - 1][c + 1] + v);
                cur.channels[c].push_back(v);
            }
        };
        if (cur.size() == 0) {
            cur.start_time = ts[i];
            push(i);
            continue;
        }
        double gap = ts[i] - (cur.start_time + static_cast<double>(cur.size() - 1) * period);
        if (std::abs(gap - period) <= tol) {
            push(i);
        } else if (std::abs(gap - 2.0 * period) <= tol) {
            push(i, true);
            push(i);
        } else {
            flush();
            cur.start_time = ts[i];
            push(i);
        }
    }
    flush();
    for (auto& s : out) s.validate();
    return out;
}

inline void save_multivariate_csv(const std::string& path, const MultivariateSeries& s) {
    s.validate();
    CsvWriter w(path);
    w.header({"timestamp_unix_s", "active_power_w", "form_factor", "phase_shift_rad"});
    int pw = s.channel_index("power_w");
    int ff = s.channel_index("form_factor");
    int ph = s.channel_index("phase_shift_rad");
    if (ff < 0 || ph < 0) throw Error("multivariate series missing hf channels");
    for (std::size_t i = 0; i < s.size(); ++i)
        w.row(std::vector<double>{s.time_at(i), s.channels[pw][i], s.channels[ff][i], s.channels[ph][i]});
}

/// Measured power never goes negative; applied at ingestion boundaries
/// (predicted series are estimates and may undershoot zero).
inline void require_nonnegative(const std::vector<PowerSeries>& segments, const std::string& context) {
    for (const auto& s : segments)
        for (double v : s.values)
            if (v < 0) throw ValidationError(context + ": negative power value in a measured series");
}

/// Resamples every loaded segment to the canonical 6 s grid.
inline std::vector<PowerSeries> to_canonical_grid(std::vector<PowerSeries> segments) {
    std::vector<PowerSeries> out;
    out.reserve(segments.size());
    for (auto& s : segments) {
        if (std::abs(s.period - kCanonicalPeriodS) < 1e-9) {
            out.push_back(std::move(s));
        } else if (s.period > kCanonicalPeriodS) {
            if (s.values.size() >= 2) out.push_back(resample_foh(s, kCanonicalPeriodS));
        } else {
            throw ValidationError("series period finer than the canonical 6 s grid is not supported");
        }
    }
    return out;
}

}  // namespace nilm
