#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "nilm/error.hpp"
#include "nilm/series.hpp"

namespace nilm {

/// One current/voltage capture at mains frequency f0, sampled at fs.
struct WaveformRecord {
    double fs = 0.0;  // Hz
    double f0 = 0.0;  // mains frequency, 50 or 60
    double start_time = 0.0;
    std::vector<double> voltage;  // volts
    std::vector<double> current;  // amperes
    std::string label;            // optional appliance name

    std::size_t size() const { return current.size(); }

    void validate() const {
        if (voltage.size() != current.size()) throw ValidationError("voltage/current length mismatch");
        if (fs <= 0 || f0 <= 0) throw ValidationError("fs and f0 must be positive");
        if (fs <= 2.0 * f0) throw ValidationError("fs must exceed twice the mains frequency");
        if (static_cast<double>(size()) < 2.0 * fs / f0)
            throw ValidationError("waveform shorter than 2 mains cycles");
    }
};

inline std::size_t samples_per_cycle(double fs, double f0) {
    double spc = fs / f0;
    double rounded = std::round(spc);
    if (std::abs(spc - rounded) > 1e-6)
        throw ValidationError("fs must be an integer multiple of f0");
    return static_cast<std::size_t>(rounded);
}

// ---------------------------------------------------------------------------
// Basic signal measures
// ---------------------------------------------------------------------------

inline double rms(std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return x.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(x.size()));
}

inline double mean_abs(std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) acc += std::abs(v);
    return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

inline double mean(std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) acc += v;
    return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

inline constexpr double kDegenerateFloor = 1e-9;

/// RMS over mean absolute value. 1.1107 for a sinusoid, 1.0 for a square wave.
inline double form_factor(std::span<const double> x) {
    double ma = mean_abs(x);
    double r = rms(x);
    if (ma <= kDegenerateFloor || r <= kDegenerateFloor)
        throw DegenerateSignalError("form_factor: signal is (near) zero");
    return r / ma;
}

/// Single-bin Fourier projection at frequency f via the Goertzel recurrence,
/// phase-referenced to the first sample: X = (2/N) sum x[n] exp(-j 2 pi f n / fs).
/// |X| is the amplitude of a pure sinusoid at f.
inline std::complex<double> goertzel_bin(std::span<const double> x, double f, double fs) {
    const std::size_t n = x.size();
    if (n == 0) throw ValidationError("goertzel_bin: empty input");
    const double omega = 2.0 * std::numbers::pi * f / fs;
    const double coeff = 2.0 * std::cos(omega);
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double s0 = x[i] + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    // y = s1 - e^{-jw} s2 equals sum x[n] e^{+jw (N-1-n)}; the rotation by
    // e^{-jw (N-1)} re-references the phase to n = 0.
    std::complex<double> y(s1 - std::cos(omega) * s2, s2 * std::sin(omega));
    std::complex<double> rot = std::polar(1.0, -omega * static_cast<double>(n - 1));
    return 2.0 / static_cast<double>(n) * (y * rot);
}

inline double wrap_phase(double a) {
    double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(a + std::numbers::pi, two_pi);
    if (w <= 0.0) w += two_pi;
    return w - std::numbers::pi;  // (-pi, pi]
}

/// Truncates to the largest whole number of cycles of f0 contained in n samples.
inline std::size_t whole_cycle_samples(std::size_t n, double f0, double fs) {
    std::size_t spc = samples_per_cycle(fs, f0);
    return (n / spc) * spc;
}

/// Phase of the current fundamental minus the phase of the voltage fundamental,
/// wrapped to (-pi, pi]. Lagging current gives a negative shift.
inline double fundamental_phase_shift(std::span<const double> current, std::span<const double> voltage,
                                      double f0, double fs) {
    std::size_t n = whole_cycle_samples(std::min(current.size(), voltage.size()), f0, fs);
    if (n == 0) throw ValidationError("fundamental_phase_shift: less than one cycle of data");
    auto i_hat = goertzel_bin(current.subspan(0, n), f0, fs);
    auto v_hat = goertzel_bin(voltage.subspan(0, n), f0, fs);
    if (std::abs(i_hat) <= kDegenerateFloor || std::abs(v_hat) <= kDegenerateFloor)
        throw DegenerateSignalError("fundamental_phase_shift: fundamental below floor");
    return wrap_phase(std::arg(i_hat) - std::arg(v_hat));
}

// ---------------------------------------------------------------------------
// Transient / steady-state segmentation
// ---------------------------------------------------------------------------

struct TransientParams {
    double on_floor_rms = 0.05;  // amperes, cycle-RMS switch-on threshold
    std::size_t settle_cycles = 5;
    double settle_tol = 0.10;  // fraction of the window median
};

struct TransientSplit {
    std::size_t onset_sample = 0;   // first sample of the first on cycle
    std::size_t settle_sample = 0;  // first steady sample (== end of transient)
    std::size_t end_sample = 0;     // end of the last whole cycle
    bool settled = false;           // false: whole post-onset signal is transient

    std::size_t transient_len() const { return settle_sample - onset_sample; }
    std::size_t steady_len() const { return end_sample - settle_sample; }
};

inline std::vector<double> cycle_rms(std::span<const double> x, double f0, double fs) {
    std::size_t spc = samples_per_cycle(fs, f0);
    std::size_t cycles = x.size() / spc;
    std::vector<double> out(cycles);
    for (std::size_t c = 0; c < cycles; ++c) out[c] = rms(x.subspan(c * spc, spc));
    return out;
}

/// Splits a switch-on record into transient and steady segments using the
/// cycle-RMS profile of the current. The transient starts at the first cycle
/// whose RMS exceeds on_floor_rms and ends at the first later cycle from which
/// settle_cycles consecutive RMS values stay within settle_tol of their median.
inline TransientSplit extract_transient(const WaveformRecord& rec, const TransientParams& p = {}) {
    rec.validate();
    const std::size_t spc = samples_per_cycle(rec.fs, rec.f0);
    std::vector<double> crms = cycle_rms(rec.current, rec.f0, rec.fs);
    const std::size_t n_cycles = crms.size();
    if (n_cycles < 2) throw ValidationError("extract_transient: record shorter than 2 cycles");

    std::size_t onset = n_cycles;
    for (std::size_t c = 0; c < n_cycles; ++c) {
        if (crms[c] > p.on_floor_rms) {
            onset = c;
            break;
        }
    }
    if (onset == n_cycles) throw DegenerateSignalError("extract_transient: no switch-on found");

    TransientSplit split;
    split.onset_sample = onset * spc;
    split.end_sample = n_cycles * spc;

    const std::size_t k = p.settle_cycles;
    for (std::size_t s = onset + 1; s + k <= n_cycles; ++s) {
        std::vector<double> w(crms.begin() + static_cast<std::ptrdiff_t>(s),
                              crms.begin() + static_cast<std::ptrdiff_t>(s + k));
        std::nth_element(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(k / 2), w.end());
        double med = w[k / 2];
        if (k % 2 == 0) {
            double lower = *std::max_element(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(k / 2));
            med = 0.5 * (med + lower);
        }
        bool stable = true;
        for (std::size_t c = s; c < s + k; ++c) {
            if (std::abs(crms[c] - med) > p.settle_tol * med) {
                stable = false;
                break;
            }
        }
        if (stable) {
            split.settle_sample = s * spc;
            split.settled = true;
            return split;
        }
    }
    split.settle_sample = split.end_sample;  // never settles: all transient, flagged
    split.settled = false;
    return split;
}

// ---------------------------------------------------------------------------
// Feature vector
// ---------------------------------------------------------------------------

enum class FeatureMode { transient, steady };

struct FeatureVector {
    FeatureMode mode = FeatureMode::steady;
    std::vector<double> values;  // aligned with feature_names(mode)
};

inline constexpr int kViImageSize = 16;
inline constexpr int kMaxHarmonic = 21;

inline std::vector<std::string> feature_names(FeatureMode mode) {
    std::vector<std::string> n = {
        "rms_current", "rms_voltage", "active_power_w", "apparent_power_va", "reactive_power_var",
        "power_factor", "current_thd",
    };
    for (int h = 3; h <= kMaxHarmonic; h += 2) n.push_back("i_h" + std::to_string(h) + "_rel");
    n.insert(n.end(), {"current_mean", "current_std", "current_skewness", "current_kurtosis",
                       "crest_factor", "form_factor", "phase_shift_rad",
                       "spectral_centroid_hz", "spectral_rolloff85_hz", "spectral_flatness",
                       "zero_crossing_rate"});
    if (mode == FeatureMode::transient) {
        n.push_back("inrush_ratio");
        n.push_back("transient_duration_s");
    }
    for (int px = 0; px < kViImageSize * kViImageSize; ++px) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "vi_%03d", px);
        n.emplace_back(buf);
    }
    return n;
}

namespace detail {

// In-place iterative radix-2 FFT. Spectral features work on a power-of-two
// prefix of the segment, so a full mixed-radix transform is not needed.
inline void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                auto u = a[i + j];
                auto v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

struct SpectralFeatures {
    double centroid_hz = 0.0;
    double rolloff85_hz = 0.0;
    double flatness = 0.0;
};

// Magnitude spectrum of a Hann-windowed power-of-two prefix (<= 16384 samples).
inline SpectralFeatures spectral_features(std::span<const double> x, double fs) {
    std::size_t n = 1;
    while (n * 2 <= std::min<std::size_t>(x.size(), 16384)) n *= 2;
    std::vector<std::complex<double>> buf(n);
    for (std::size_t i = 0; i < n; ++i) {
        double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
        buf[i] = x[i] * w;
    }
    fft_radix2(buf);

    const std::size_t bins = n / 2 + 1;
    double total = 0.0, weighted = 0.0, log_acc = 0.0;
    std::vector<double> mag(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        mag[k] = std::abs(buf[k]);
        double f = static_cast<double>(k) * fs / static_cast<double>(n);
        total += mag[k];
        weighted += f * mag[k];
        log_acc += std::log(mag[k] + 1e-20);
    }
    SpectralFeatures out;
    if (total <= 0.0) return out;
    out.centroid_hz = weighted / total;
    double cum = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
        cum += mag[k];
        if (cum >= 0.85 * total) {
            out.rolloff85_hz = static_cast<double>(k) * fs / static_cast<double>(n);
            break;
        }
    }
    double geo = std::exp(log_acc / static_cast<double>(bins));
    out.flatness = geo / (total / static_cast<double>(bins));
    return out;
}

inline double zero_crossing_rate(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    std::size_t crossings = 0;
    for (std::size_t i = 1; i < x.size(); ++i)
        if ((x[i - 1] < 0.0 && x[i] >= 0.0) || (x[i - 1] >= 0.0 && x[i] < 0.0)) ++crossings;
    return static_cast<double>(crossings) / static_cast<double>(x.size() - 1);
}

// One averaged cycle of (v, i), min-max normalized per axis, rasterized to a
// binary 16x16 image. Row = current, column = voltage.
inline void vi_trajectory_image(std::span<const double> current, std::span<const double> voltage,
                                std::size_t spc, std::vector<double>& out) {
    const int sz = kViImageSize;
    out.assign(static_cast<std::size_t>(sz) * sz, 0.0);
    std::size_t cycles = std::min(current.size(), voltage.size()) / spc;
    if (cycles == 0) return;
    std::vector<double> vi(spc, 0.0), vv(spc, 0.0);
    for (std::size_t c = 0; c < cycles; ++c) {
        for (std::size_t k = 0; k < spc; ++k) {
            vi[k] += current[c * spc + k];
            vv[k] += voltage[c * spc + k];
        }
    }
    for (std::size_t k = 0; k < spc; ++k) {
        vi[k] /= static_cast<double>(cycles);
        vv[k] /= static_cast<double>(cycles);
    }
    auto [imin, imax] = std::minmax_element(vi.begin(), vi.end());
    auto [vmin, vmax] = std::minmax_element(vv.begin(), vv.end());
    double ispan = *imax - *imin, vspan = *vmax - *vmin;
    for (std::size_t k = 0; k < spc; ++k) {
        double ni = ispan > 0 ? (vi[k] - *imin) / ispan : 0.5;
        double nv = vspan > 0 ? (vv[k] - *vmin) / vspan : 0.5;
        int row = std::min(sz - 1, static_cast<int>(ni * sz));
        int col = std::min(sz - 1, static_cast<int>(nv * sz));
        out[static_cast<std::size_t>(row) * sz + col] = 1.0;
    }
}

}  // namespace detail

/// Computes the pinned feature list over one segment (>= 1 whole cycle).
/// For transient mode, steady_rms_ref is the steady-state cycle RMS used for
/// the inrush ratio; when <= 0 the segment's own median cycle RMS is used.
inline FeatureVector compute_feature_vector(std::span<const double> current, std::span<const double> voltage,
                                            double f0, double fs, FeatureMode mode,
                                            double steady_rms_ref = 0.0) {
    const std::size_t spc = samples_per_cycle(fs, f0);
    if (fs <= 2.0 * kMaxHarmonic * f0)
        throw ValidationError("compute_feature_vector: fs too low for harmonic analysis up to " +
                              std::to_string(kMaxHarmonic) + " f0");
    const std::size_t n = whole_cycle_samples(std::min(current.size(), voltage.size()), f0, fs);
    if (n < spc) throw ValidationError("compute_feature_vector: segment shorter than one cycle");
    auto i_seg = current.subspan(0, n);
    auto v_seg = voltage.subspan(0, n);

    double rms_i = rms(i_seg);
    double rms_v = rms(v_seg);
    if (rms_i <= kDegenerateFloor || rms_v <= kDegenerateFloor)
        throw DegenerateSignalError("compute_feature_vector: degenerate segment");

    double p_active = 0.0;
    for (std::size_t k = 0; k < n; ++k) p_active += v_seg[k] * i_seg[k];
    p_active /= static_cast<double>(n);
    double s_apparent = rms_v * rms_i;

    auto i1 = goertzel_bin(i_seg, f0, fs);
    auto v1 = goertzel_bin(v_seg, f0, fs);
    double phase = wrap_phase(std::arg(i1) - std::arg(v1));
    // fundamental reactive power; positive for lagging (inductive) current
    double q_fund = 0.5 * std::abs(v1) * std::abs(i1) * std::sin(wrap_phase(std::arg(v1) - std::arg(i1)));

    double i1_mag = std::abs(i1);
    double harm_sq = 0.0;
    std::vector<double> odd_rel;
    for (int h = 2; h <= kMaxHarmonic; ++h) {
        double m = std::abs(goertzel_bin(i_seg, h * f0, fs));
        harm_sq += m * m;
        if (h % 2 == 1) odd_rel.push_back(i1_mag > kDegenerateFloor ? m / i1_mag : 0.0);
    }
    double thd = i1_mag > kDegenerateFloor ? std::sqrt(harm_sq) / i1_mag : 0.0;

    double mu = mean(i_seg);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : i_seg) {
        double d = v - mu;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);
    double sd = std::sqrt(m2);
    double skew = sd > kDegenerateFloor ? m3 / (sd * sd * sd) : 0.0;
    double kurt = sd > kDegenerateFloor ? m4 / (m2 * m2) : 0.0;

    double peak = 0.0;
    for (double v : i_seg) peak = std::max(peak, std::abs(v));
    double crest = peak / rms_i;

    auto spectral = detail::spectral_features(i_seg, fs);

    FeatureVector fv;
    fv.mode = mode;
    fv.values = {rms_i, rms_v, p_active, s_apparent, q_fund,
                 s_apparent > kDegenerateFloor ? p_active / s_apparent : 0.0, thd};
    fv.values.insert(fv.values.end(), odd_rel.begin(), odd_rel.end());
    fv.values.insert(fv.values.end(),
                     {mu, sd, skew, kurt, crest, form_factor(i_seg), phase,
                      spectral.centroid_hz, spectral.rolloff85_hz, spectral.flatness,
                      detail::zero_crossing_rate(i_seg)});

    if (mode == FeatureMode::transient) {
        std::vector<double> crms = cycle_rms(i_seg, f0, fs);
        double peak_rms = *std::max_element(crms.begin(), crms.end());
        double ref = steady_rms_ref;
        if (ref <= 0.0) {
            std::vector<double> sorted = crms;
            std::sort(sorted.begin(), sorted.end());
            ref = sorted[sorted.size() / 2];
        }
        fv.values.push_back(ref > kDegenerateFloor ? peak_rms / ref : 0.0);
        fv.values.push_back(static_cast<double>(n) / fs);
    }

    std::vector<double> vi_pixels;
    detail::vi_trajectory_image(i_seg, v_seg, spc, vi_pixels);
    fv.values.insert(fv.values.end(), vi_pixels.begin(), vi_pixels.end());
    return fv;
}

/// Transient + steady feature vectors for one switch-on record.
struct RecordFeatures {
    FeatureVector transient;
    FeatureVector steady;
    TransientSplit split;
};

inline RecordFeatures record_features(const WaveformRecord& rec, const TransientParams& p = {}) {
    TransientSplit split = extract_transient(rec, p);
    const std::size_t spc = samples_per_cycle(rec.fs, rec.f0);
    if (split.steady_len() < spc)
        throw DegenerateSignalError("record_features: no steady segment (never settled)");
    std::span<const double> i(rec.current), v(rec.voltage);
    auto i_steady = i.subspan(split.settle_sample, split.steady_len());
    auto v_steady = v.subspan(split.settle_sample, split.steady_len());
    RecordFeatures out;
    out.split = split;
    out.steady = compute_feature_vector(i_steady, v_steady, rec.f0, rec.fs, FeatureMode::steady);
    double steady_rms = rms(i_steady);
    auto i_trans = i.subspan(split.onset_sample, split.transient_len());
    auto v_trans = v.subspan(split.onset_sample, split.transient_len());
    out.transient =
        compute_feature_vector(i_trans, v_trans, rec.f0, rec.fs, FeatureMode::transient, steady_rms);
    return out;
}

// ---------------------------------------------------------------------------
// 6-second multivariate channel extraction
// ---------------------------------------------------------------------------

struct HfSeriesResult {
    MultivariateSeries series;
    std::vector<std::uint8_t> low_current;  // per-slot quality flag
};

/// Per 6 s slot emits (mean active power, current form factor, fundamental
/// phase shift). Slots whose current RMS is below rms_floor emit the neutral
/// values (P, 1.0, 0.0) and are flagged, keeping the grid dense for windowing.
inline HfSeriesResult hf_channel_series(const WaveformRecord& rec, double period = kCanonicalPeriodS,
                                        double rms_floor = 1e-3) {
    rec.validate();
    double slot_samples_d = rec.fs * period;
    double rounded = std::round(slot_samples_d);
    if (std::abs(slot_samples_d - rounded) > 1e-6)
        throw ValidationError("hf_channel_series: fs * period must be an integer sample count");
    const std::size_t slot = static_cast<std::size_t>(rounded);
    const std::size_t n_slots = rec.size() / slot;
    if (n_slots == 0) throw ValidationError("hf_channel_series: record shorter than one slot");

    HfSeriesResult out;
    out.series.start_time = rec.start_time;
    out.series.period = period;
    out.series.channel_names = kHfChannelNames;
    out.series.channels.assign(3, std::vector<double>(n_slots));
    out.low_current.assign(n_slots, 0);

    std::span<const double> i(rec.current), v(rec.voltage);
    for (std::size_t s = 0; s < n_slots; ++s) {
        auto i_slot = i.subspan(s * slot, slot);
        auto v_slot = v.subspan(s * slot, slot);
        double p = 0.0;
        for (std::size_t k = 0; k < slot; ++k) p += v_slot[k] * i_slot[k];
        p /= static_cast<double>(slot);
        out.series.channels[0][s] = p;
        if (rms(i_slot) < rms_floor) {
            out.series.channels[1][s] = 1.0;
            out.series.channels[2][s] = 0.0;
            out.low_current[s] = 1;
        } else {
            out.series.channels[1][s] = form_factor(i_slot);
            out.series.channels[2][s] = fundamental_phase_shift(i_slot, v_slot, rec.f0, rec.fs);
        }
    }
    return out;
}

}  // namespace nilm
