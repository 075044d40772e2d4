#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "nilm/rng.hpp"
#include "nilm/waveform.hpp"
#include "nilm/waveform_io.hpp"
#include "support/oracles.hpp"

using namespace nilm;
using std::numbers::pi;

namespace {

std::vector<double> sine(double amplitude, double freq, double fs, std::size_t n, double phase = 0.0) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = amplitude * std::sin(2.0 * pi * freq * static_cast<double>(i) / fs + phase);
    return out;
}

WaveformRecord resistive_record(double fs = 14000.0, double f0 = 50.0, double seconds = 0.5,
                                double v_amp = 230.0 * std::numbers::sqrt2,
                                double i_amp = 10.0 * std::numbers::sqrt2) {
    WaveformRecord rec;
    rec.fs = fs;
    rec.f0 = f0;
    auto n = static_cast<std::size_t>(fs * seconds);
    rec.voltage = sine(v_amp, f0, fs, n);
    rec.current = sine(i_amp, f0, fs, n);
    return rec;
}

}  // namespace

TEST_CASE("form factor: sinusoid, square wave, degenerate guard") {
    auto s = sine(3.7, 50.0, 14000.0, 2800);
    CHECK(form_factor(s) == doctest::Approx(pi / (2.0 * std::numbers::sqrt2)).epsilon(1e-3));

    std::vector<double> square(1000);
    for (std::size_t i = 0; i < square.size(); ++i) square[i] = (i / 10) % 2 == 0 ? 2.5 : -2.5;
    CHECK(form_factor(square) == doctest::Approx(1.0));

    std::vector<double> zeros(100, 0.0);
    CHECK_THROWS_AS(form_factor(zeros), DegenerateSignalError);
}

TEST_CASE("goertzel matches a direct DFT sum on random signals") {
    Rng rng(42);
    for (int rep = 0; rep < 20; ++rep) {
        std::size_t n = 280 * (1 + rng.uniform_index(5));
        std::vector<double> x(n);
        for (auto& v : x) v = rng.uniform(-2.0, 2.0);
        double f = 50.0 * static_cast<double>(1 + rng.uniform_index(10));
        auto got = goertzel_bin(x, f, 14000.0);
        auto want = oracle::direct_dft_bin(x, f, 14000.0);
        CHECK(std::abs(got - want) < 1e-9);
    }
}

TEST_CASE("fundamental phase shift sign convention and amplitude invariance") {
    const double fs = 14000.0, f0 = 50.0;
    const std::size_t n = 2800;  // 10 cycles
    auto v = sine(325.0, f0, fs, n);

    SUBCASE("identical signals give zero") {
        CHECK(fundamental_phase_shift(v, v, f0, fs) == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("current delayed by a quarter period gives -pi/2") {
        auto i = sine(10.0, f0, fs, n, -pi / 2.0);
        CHECK(fundamental_phase_shift(i, v, f0, fs) == doctest::Approx(-pi / 2.0).epsilon(1e-3));
    }
    SUBCASE("scaling the current does not change the phase") {
        auto i = sine(1.0, f0, fs, n, 0.7);
        auto i10 = sine(10.0, f0, fs, n, 0.7);
        CHECK(fundamental_phase_shift(i, v, f0, fs) ==
              doctest::Approx(fundamental_phase_shift(i10, v, f0, fs)).epsilon(1e-12));
    }
    SUBCASE("antisymmetry under argument swap") {
        auto i = sine(5.0, f0, fs, n, 1.234);
        double a = fundamental_phase_shift(i, v, f0, fs);
        double b = fundamental_phase_shift(v, i, f0, fs);
        CHECK(wrap_phase(a + b) == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("zero current is degenerate") {
        std::vector<double> zeros(n, 0.0);
        CHECK_THROWS_AS(fundamental_phase_shift(zeros, v, f0, fs), DegenerateSignalError);
    }
}

TEST_CASE("transient extraction") {
    const double fs = 14000.0, f0 = 50.0;
    const std::size_t spc = samples_per_cycle(fs, f0);

    SUBCASE("steady sine from sample 0 settles within K cycles") {
        WaveformRecord rec;
        rec.fs = fs;
        rec.f0 = f0;
        rec.current = sine(2.0, f0, fs, spc * 20);
        rec.voltage = sine(325.0, f0, fs, spc * 20);
        TransientParams p;
        p.on_floor_rms = 0.5;
        auto split = extract_transient(rec, p);
        CHECK(split.settled);
        CHECK(split.onset_sample == 0);
        CHECK(split.transient_len() <= p.settle_cycles * spc);
        CHECK(split.steady_len() >= spc);
    }

    SUBCASE("amplitude step 1 to 2 at cycle 10 splits right after the step") {
        // hand trace: cycle RMS is 0.707 for cycles 0..9 and 1.414 after; with the
        // on-floor at 1.0 the onset is cycle 10, and the first settle window of 5
        // flat cycles starts at cycle 11, so exactly one transient cycle remains.
        WaveformRecord rec;
        rec.fs = fs;
        rec.f0 = f0;
        std::size_t n = spc * 30;
        rec.current.resize(n);
        rec.voltage = sine(325.0, f0, fs, n);
        for (std::size_t i = 0; i < n; ++i) {
            double amp = i < spc * 10 ? 1.0 : 2.0;
            rec.current[i] = amp * std::sin(2.0 * pi * f0 * static_cast<double>(i) / fs);
        }
        TransientParams p;
        p.on_floor_rms = 1.0;
        auto split = extract_transient(rec, p);
        CHECK(split.settled);
        CHECK(split.onset_sample == spc * 10);
        CHECK(split.settle_sample == spc * 11);
    }

    SUBCASE("record below the floor has no onset") {
        WaveformRecord rec;
        rec.fs = fs;
        rec.f0 = f0;
        rec.current = sine(0.01, f0, fs, spc * 10);
        rec.voltage = sine(325.0, f0, fs, spc * 10);
        TransientParams p;
        p.on_floor_rms = 1.0;
        CHECK_THROWS_AS(extract_transient(rec, p), DegenerateSignalError);
    }

    SUBCASE("record shorter than 2 cycles is rejected") {
        WaveformRecord rec;
        rec.fs = fs;
        rec.f0 = f0;
        rec.current = sine(1.0, f0, fs, spc * 3 / 2);
        rec.voltage = sine(1.0, f0, fs, spc * 3 / 2);
        CHECK_THROWS_AS(extract_transient(rec), ValidationError);
    }

    SUBCASE("a ramp that never settles is flagged") {
        WaveformRecord rec;
        rec.fs = fs;
        rec.f0 = f0;
        std::size_t n = spc * 12;
        rec.current.resize(n);
        rec.voltage = sine(325.0, f0, fs, n);
        for (std::size_t i = 0; i < n; ++i) {
            double amp = 1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n);
            rec.current[i] = amp * std::sin(2.0 * pi * f0 * static_cast<double>(i) / fs);
        }
        TransientParams p;
        p.on_floor_rms = 0.5;
        p.settle_tol = 0.001;
        auto split = extract_transient(rec, p);
        CHECK_FALSE(split.settled);
        CHECK(split.steady_len() == 0);
    }
}

TEST_CASE("feature vector on analytic loads") {
    const double fs = 14000.0, f0 = 50.0;
    const std::size_t n = 2800;
    auto v = sine(325.0, f0, fs, n);

    SUBCASE("resistive load: unit power factor, no reactive power, no THD") {
        auto i = sine(10.0, f0, fs, n);
        auto fv = compute_feature_vector(i, v, f0, fs, FeatureMode::steady);
        auto names = feature_names(FeatureMode::steady);
        REQUIRE(fv.values.size() == names.size());
        auto at = [&](const std::string& name) {
            for (std::size_t k = 0; k < names.size(); ++k)
                if (names[k] == name) return fv.values[k];
            FAIL("missing feature ", name);
            return 0.0;
        };
        CHECK(at("power_factor") == doctest::Approx(1.0).epsilon(1e-3));
        CHECK(std::abs(at("reactive_power_var")) < 1e-3 * at("apparent_power_va"));
        CHECK(at("current_thd") < 1e-3);
        CHECK(at("form_factor") == doctest::Approx(1.1107).epsilon(1e-3));
        CHECK(at("active_power_w") == doctest::Approx(325.0 * 10.0 / 2.0).epsilon(1e-6));
        CHECK(at("crest_factor") == doctest::Approx(std::numbers::sqrt2).epsilon(1e-3));
        CHECK(at("current_kurtosis") == doctest::Approx(1.5).epsilon(1e-3));
        for (double val : fv.values) CHECK(std::isfinite(val));
    }

    SUBCASE("doubling the current doubles P and S, fixes the ratios") {
        auto i1 = sine(5.0, f0, fs, n, 0.3);
        auto i2 = sine(10.0, f0, fs, n, 0.3);
        auto a = compute_feature_vector(i1, v, f0, fs, FeatureMode::steady);
        auto b = compute_feature_vector(i2, v, f0, fs, FeatureMode::steady);
        auto names = feature_names(FeatureMode::steady);
        for (std::size_t k = 0; k < names.size(); ++k) {
            if (names[k] == "active_power_w" || names[k] == "apparent_power_va")
                CHECK(b.values[k] == doctest::Approx(2.0 * a.values[k]).epsilon(1e-9));
            if (names[k] == "power_factor" || names[k] == "form_factor" || names[k] == "phase_shift_rad")
                CHECK(b.values[k] == doctest::Approx(a.values[k]).epsilon(1e-9));
        }
    }

    SUBCASE("quadrature load: P near zero, |Q| near S") {
        auto i = sine(10.0, f0, fs, n, -pi / 2.0);
        auto fv = compute_feature_vector(i, v, f0, fs, FeatureMode::steady);
        auto names = feature_names(FeatureMode::steady);
        double p = 0, q = 0, s = 0;
        for (std::size_t k = 0; k < names.size(); ++k) {
            if (names[k] == "active_power_w") p = fv.values[k];
            if (names[k] == "reactive_power_var") q = fv.values[k];
            if (names[k] == "apparent_power_va") s = fv.values[k];
        }
        CHECK(std::abs(p) < 1e-3 * s);
        CHECK(std::abs(q) == doctest::Approx(s).epsilon(1e-3));
        CHECK(q > 0);  // lagging current counts as positive reactive power
    }

    SUBCASE("power factor stays in [0,1] on random harmonic loads") {
        Rng rng(99);
        for (int rep = 0; rep < 25; ++rep) {
            std::vector<double> i(n, 0.0);
            // fundamental displacement under 90 degrees keeps the load passive
            auto fund = sine(rng.uniform(1.0, 5.0), f0, fs, n, rng.uniform(-1.2, 1.2));
            for (std::size_t k = 0; k < n; ++k) i[k] += fund[k];
            for (int h = 3; h <= 7; h += 2) {
                auto part = sine(rng.uniform(0.1, 1.0), h * f0, fs, n, rng.uniform(-pi, pi));
                for (std::size_t k = 0; k < n; ++k) i[k] += part[k];
            }
            auto fv = compute_feature_vector(i, v, f0, fs, FeatureMode::steady);
            auto names = feature_names(FeatureMode::steady);
            for (std::size_t k = 0; k < names.size(); ++k) {
                if (names[k] == "power_factor") {
                    CHECK(fv.values[k] >= -1e-9);
                    CHECK(fv.values[k] <= 1.0 + 1e-9);
                }
                if (names[k] == "apparent_power_va")
                    CHECK(fv.values[k] >= std::abs(fv.values[k - 1]));  // S >= |P|, P is previous column
            }
        }
    }
}

TEST_CASE("transient-mode features carry inrush ratio and duration") {
    const double fs = 14000.0, f0 = 50.0;
    const std::size_t spc = samples_per_cycle(fs, f0);
    WaveformRecord rec;
    rec.fs = fs;
    rec.f0 = f0;
    std::size_t n = spc * 40;
    rec.voltage = sine(325.0, f0, fs, n);
    rec.current.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        // 3x inrush for 2 cycles, then steady
        double amp = i < spc * 2 ? 6.0 : 2.0;
        rec.current[i] = amp * std::sin(2.0 * pi * f0 * static_cast<double>(i) / fs);
    }
    TransientParams p;
    p.on_floor_rms = 0.5;
    auto features = record_features(rec, p);
    auto names = feature_names(FeatureMode::transient);
    REQUIRE(features.transient.values.size() == names.size());
    double inrush = 0, duration = 0;
    for (std::size_t k = 0; k < names.size(); ++k) {
        if (names[k] == "inrush_ratio") inrush = features.transient.values[k];
        if (names[k] == "transient_duration_s") duration = features.transient.values[k];
    }
    CHECK(inrush == doctest::Approx(3.0).epsilon(0.02));
    CHECK(duration > 0.0);
    CHECK(features.steady.values.size() == feature_names(FeatureMode::steady).size());
}

TEST_CASE("vi trajectory image marks one averaged cycle") {
    const double fs = 14000.0, f0 = 50.0;
    const std::size_t n = 2800;
    auto v = sine(325.0, f0, fs, n);
    auto i = sine(10.0, f0, fs, n);
    auto fv = compute_feature_vector(i, v, f0, fs, FeatureMode::steady);
    auto names = feature_names(FeatureMode::steady);
    double on_pixels = 0.0;
    for (std::size_t k = 0; k < names.size(); ++k) {
        if (names[k].rfind("vi_", 0) == 0) {
            CHECK((fv.values[k] == 0.0 || fv.values[k] == 1.0));
            on_pixels += fv.values[k];
        }
    }
    // a resistive load traces the image diagonal
    CHECK(on_pixels >= 16.0);
    CHECK(on_pixels <= 40.0);
}

TEST_CASE("hf channel series on a resistive sine") {
    auto rec = resistive_record(14000.0, 50.0, 12.0);  // two 6 s slots
    auto result = hf_channel_series(rec);
    REQUIRE(result.series.size() == 2);
    result.series.validate();
    CHECK(result.series.channels[0][0] == doctest::Approx(2300.0).epsilon(1e-6));
    CHECK(result.series.channels[1][0] == doctest::Approx(1.1107).epsilon(1e-3));
    CHECK(result.series.channels[2][0] == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(result.low_current == std::vector<std::uint8_t>{0, 0});

    SUBCASE("slot rows match per-slot calls") {
        WaveformRecord one;
        one.fs = rec.fs;
        one.f0 = rec.f0;
        one.voltage.assign(rec.voltage.begin(), rec.voltage.begin() + 84000);
        one.current.assign(rec.current.begin(), rec.current.begin() + 84000);
        auto first = hf_channel_series(one);
        for (int c = 0; c < 3; ++c)
            CHECK(result.series.channels[c][0] == doctest::Approx(first.series.channels[c][0]));
    }

    SUBCASE("zero-current slots emit neutral values and a flag") {
        WaveformRecord quiet = rec;
        for (auto& x : quiet.current) x = 0.0;
        auto flagged = hf_channel_series(quiet);
        CHECK(flagged.low_current == std::vector<std::uint8_t>{1, 1});
        CHECK(flagged.series.channels[0][0] == doctest::Approx(0.0));
        CHECK(flagged.series.channels[1][0] == 1.0);
        CHECK(flagged.series.channels[2][0] == 0.0);
    }

    SUBCASE("record shorter than one slot is rejected") {
        WaveformRecord tiny;
        tiny.fs = 14000.0;
        tiny.f0 = 50.0;
        tiny.voltage = sine(325.0, 50.0, 14000.0, 14000);
        tiny.current = sine(1.0, 50.0, 14000.0, 14000);
        CHECK_THROWS_AS(hf_channel_series(tiny), ValidationError);
    }
}

TEST_CASE("waveform sidecar + payload round-trip") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "nilm_waveform_io";
    fs::create_directories(dir);
    auto sidecar = (dir / "rec.json").string();

    auto rec = resistive_record(14000.0, 50.0, 0.1);
    rec.label = "kettle";
    rec.start_time = 1.7e9;
    save_waveform(sidecar, rec);
    auto loaded = load_waveform(sidecar);
    CHECK(loaded.fs == rec.fs);
    CHECK(loaded.f0 == rec.f0);
    CHECK(loaded.label == "kettle");
    CHECK(loaded.size() == rec.size());
    // payload is float32, so compare at float precision
    for (std::size_t k = 0; k < rec.size(); k += 97)
        CHECK(loaded.current[k] == doctest::Approx(rec.current[k]).epsilon(1e-6));

    SUBCASE("corrupt sidecar is a validation error") {
        FILE* f = fopen(sidecar.c_str(), "w");
        fputs("{not json", f);
        fclose(f);
        CHECK_THROWS_AS(load_waveform(sidecar), ValidationError);
    }

    SUBCASE("truncated payload is a validation error") {
        fs::resize_file(waveform_payload_path(sidecar), 13);
        CHECK_THROWS_AS(load_waveform(sidecar), ValidationError);
    }

    fs::remove_all(dir);
}
