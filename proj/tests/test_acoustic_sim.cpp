#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cfcw/acoustic_sim.hpp"
#include "cfcw/fft.hpp"
#include "cfcw/tx_design.hpp"

using namespace cfcw;

namespace {

// Frequency of the strongest Welch bin within [lo, hi].
double dominant_frequency(const std::vector<double>& x, double fs, double lo, double hi) {
    auto s = welch_psd(x, fs, 2048);
    double best = -1.0, best_f = 0.0;
    for (std::size_t k = 0; k < s.power.size(); ++k) {
        double f = static_cast<double>(k) * s.bin_width_hz;
        if (f < lo || f > hi) continue;
        if (s.power[k] > best) {
            best = s.power[k];
            best_f = f;
        }
    }
    return best_f;
}

double rms(const std::vector<double>& x, std::size_t from = 0) {
    double p = 0.0;
    for (std::size_t i = from; i < x.size(); ++i) p += x[i] * x[i];
    return std::sqrt(p / static_cast<double>(x.size() - from));
}

Scene free_field() {
    Scene scene;
    scene.geometry = echo_array();
    scene.mic_noise_snr_db = 0.0;
    return scene;
}

}  // namespace

TEST_CASE("standard array layout") {
    auto g = echo_array();
    REQUIRE(g.mic_positions.size() == 7);
    CHECK_NOTHROW(g.validate_standard());
    Vec3 c = g.centroid();
    CHECK(distance(g.secondary_source_position, c) == doctest::Approx(0.15));
    // ring mics sit 3.6 cm from the center mic
    int ring = 0;
    for (const auto& m : g.mic_positions)
        if (std::abs(distance(m, c) - 0.036) < 1e-9) ++ring;
    CHECK(ring == 6);

    auto bad = echo_array(0.05);
    CHECK_THROWS_AS(bad.validate_standard(), Error);
}

TEST_CASE("free-field propagation: delay and spreading loss") {
    // single mic at origin, static beacon 0.30 m away, pure tone
    Scene scene = free_field();
    auto sched = build_constant_schedule(7000.0, 40000.0, 0.003, 0.03);
    auto tx = synthesize_transmit(sched, 192000.0, 1.0, 0.0);  // beacon tone only
    auto path = MotionPath::stationary({0.30, 0.0, 0.0}, 0.05);
    scene.geometry.mic_positions = {{0.0, 0.0, 0.0}, {0.15, 0.0, 0.0}};
    scene.geometry.secondary_source_position = {0.0, 0.60, 0.0};

    auto mics = propagate(scene, path, tx);
    REQUIRE(mics.size() == 2);

    // first arrival at mic 0: 0.30/343 = 874.6 us
    double thresh = 0.1 / 0.30;
    std::size_t first = 0;
    while (first < mics[0].size() && std::abs(mics[0][first]) < thresh) ++first;
    double t_arrival = static_cast<double>(first) / 192000.0;
    CHECK(t_arrival == doctest::Approx(874.6e-6).epsilon(0.02));

    // amplitude falls as 1/r: mic 1 is at 0.15 m, so twice the amplitude
    double a0 = rms(mics[0], mics[0].size() / 2);
    double a1 = rms(mics[1], mics[1].size() / 2);
    CHECK(a1 / a0 == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("Doppler emerges from the time-varying delay") {
    // beacon receding radially at 1 m/s, 42 kHz tone: shift f*v/c = 122.4 Hz
    Scene scene = free_field();
    scene.geometry.mic_positions = {{0.0, 0.0, 0.0}};
    scene.geometry.secondary_source_position = {0.0, 0.60, 0.0};
    auto sched = build_constant_schedule(7000.0, 42000.0, 0.003, 0.3);
    auto tx = synthesize_transmit(sched, 192000.0, 1.0, 0.0);

    std::vector<double> ts;
    std::vector<Vec3> ps;
    for (int i = 0; i <= 400; ++i) {
        double t = i * 0.001;
        ts.push_back(t);
        ps.push_back({0.20 + 1.0 * t, 0.0, 0.0});
    }
    MotionPath path{ts, ps};
    auto mics = propagate(scene, path, tx);

    // instantaneous frequency from the analytic identity
    // cos(w) = (x[n-1]+x[n+1])/(2 x[n]) for a locally pure sinusoid
    std::vector<double> est;
    for (std::size_t n = 192000 / 10; n < mics[0].size() - 1; ++n) {
        if (std::abs(mics[0][n]) < 0.5 * rms(mics[0], n)) continue;
        double c = (mics[0][n - 1] + mics[0][n + 1]) / (2.0 * mics[0][n]);
        if (std::abs(c) > 1.0) continue;
        est.push_back(std::acos(c) * 192000.0 / kTwoPi);
    }
    std::sort(est.begin(), est.end());
    double med = est[est.size() / 2];
    CHECK(42000.0 - med == doctest::Approx(42000.0 * 1.0 / 343.0).epsilon(0.02));
}

TEST_CASE("image-source reflection matches the closed form") {
    Scene scene = free_field();
    scene.geometry.mic_positions = {{0.0, 0.0, 0.0}};
    scene.geometry.secondary_source_position = {0.0, 0.60, 0.0};
    // wall 0.5 m behind the array: plane y = -0.5
    Reflector wall;
    wall.normal = {0.0, 1.0, 0.0};
    wall.offset = -0.5;
    wall.coefficient = 0.8;
    scene.reflectors.push_back(wall);

    Vec3 beacon{0.0, 0.30, 0.0};
    auto sched = build_constant_schedule(7000.0, 40000.0, 0.003, 0.03);
    auto tx = synthesize_transmit(sched, 192000.0, 1.0, 0.0);
    auto path = MotionPath::stationary(beacon, 0.05);
    auto with_wall = propagate(scene, path, tx);
    scene.reflectors.clear();
    auto without = propagate(scene, path, tx);

    // NLOS = with_wall - without: first arrival at the image-source distance
    std::vector<double> nlos(with_wall[0].size());
    for (std::size_t i = 0; i < nlos.size(); ++i) nlos[i] = with_wall[0][i] - without[0][i];
    Vec3 image = wall.mirror(beacon);  // (0, -1.3, 0)
    CHECK(image.y == doctest::Approx(-1.3));
    double d_img = distance(image, {0.0, 0.0, 0.0});
    double thresh = 0.1 * wall.coefficient / d_img;
    std::size_t first = 0;
    while (first < nlos.size() && std::abs(nlos[first]) < thresh) ++first;
    CHECK(static_cast<double>(first) / 192000.0 ==
          doctest::Approx(d_img / 343.0).epsilon(0.02));
    // and it is attenuated by coefficient/d_img
    CHECK(rms(nlos, nlos.size() / 2) / rms(without[0], nlos.size() / 2) ==
          doctest::Approx(wall.coefficient * 0.30 / d_img).epsilon(0.02));

    // beacon on the wrong side of a reflector is rejected
    scene.reflectors.push_back(wall);
    auto bad_path = MotionPath::stationary({0.0, -0.6, 0.0}, 0.05);
    CHECK_THROWS_AS(propagate(scene, bad_path, tx), Error);
}

TEST_CASE("square-law capture down-converts a 45/38 kHz pair to 7 kHz") {
    // the pair is inaudible; the quadratic term writes the difference line
    std::vector<double> x(192000);
    for (std::size_t i = 0; i < x.size(); ++i) {
        double t = static_cast<double>(i) / 192000.0;
        x[i] = std::sin(kTwoPi * 45000.0 * t) + std::sin(kTwoPi * 38000.0 * t);
    }
    auto cap = capture({x}, 192000.0, {1.0, 0.1}, default_capture_options());
    CHECK(cap.sample_rate == doctest::Approx(16000.0));
    CHECK(dominant_frequency(cap.channels[0], 16000.0, 100.0, 8000.0) ==
          doctest::Approx(7000.0).epsilon(0.01));

    // a linear microphone records (nearly) nothing: both tones are above
    // Nyquist, leaving only stopband leakage far below the difference line
    auto opts = default_capture_options();
    opts.notch_hz = 0.0;
    auto square = capture({x}, 192000.0, {1.0, 0.1}, opts);
    auto linear = capture({x}, 192000.0, {1.0, 0.0}, opts);
    CHECK(rms(linear.channels[0], 4000) < 0.01 * rms(square.channels[0], 4000));
}

TEST_CASE("difference-line phase moves with the primary frequency") {
    // delaying the primary by dd shifts the 7 kHz line by 2*pi*f1*dd/c,
    // not 2*pi*7k*dd/c: the fine wavelength is the whole point
    const double fs = 192000.0, f1 = 40000.0, f2 = 33000.0, c = 343.0;
    const double dd = 0.001;  // 1 mm
    auto opts = default_capture_options();
    opts.notch_hz = 0.0;  // plain chain; the notch trades a small line bias for burst rejection
    auto make = [&](double delay_s) {
        std::vector<double> x(192000);
        for (std::size_t i = 0; i < x.size(); ++i) {
            double t = static_cast<double>(i) / fs;
            x[i] = std::sin(kTwoPi * f1 * (t - delay_s)) + std::sin(kTwoPi * f2 * t);
        }
        return capture({x}, fs, {1.0, 0.1}, opts);
    };
    auto a = make(0.0), b = make(dd / c);
    auto coeff = [&](const RawCapture& cap) {
        std::complex<double> acc;
        const auto& x = cap.channels[0];
        for (std::size_t i = 2000; i < x.size(); ++i) {
            double t = static_cast<double>(i) / 16000.0;
            acc += x[i] * std::exp(std::complex<double>(0.0, -kTwoPi * 7000.0 * t));
        }
        return acc;
    };
    double dphi = std::arg(coeff(a) / coeff(b));
    CHECK(dphi == doctest::Approx(kTwoPi * f1 * dd / c).epsilon(1e-3));
}

TEST_CASE("mic noise and ambient mixing") {
    std::vector<double> x(192000);
    for (std::size_t i = 0; i < x.size(); ++i) {
        double t = static_cast<double>(i) / 192000.0;
        x[i] = std::sin(kTwoPi * 45000.0 * t) + std::sin(kTwoPi * 38000.0 * t);
    }
    auto cap = capture({x}, 192000.0, {1.0, 0.1}, default_capture_options());

    auto noisy = cap;
    add_mic_noise(noisy, 40.0, 123);
    double sig = rms(cap.channels[0], 2000);
    std::vector<double> diff(cap.channels[0].size());
    for (std::size_t i = 0; i < diff.size(); ++i)
        diff[i] = noisy.channels[0][i] - cap.channels[0][i];
    CHECK(20.0 * std::log10(sig / rms(diff)) == doctest::Approx(40.0).epsilon(0.01));

    // deterministic per seed
    auto again = cap;
    add_mic_noise(again, 40.0, 123);
    CHECK(again.channels[0] == noisy.channels[0]);

    // level <= -200 dB leaves the capture untouched
    std::vector<double> voice(cap.channels[0].size());
    for (std::size_t i = 0; i < voice.size(); ++i)
        voice[i] = std::sin(kTwoPi * 440.0 * static_cast<double>(i) / 16000.0);
    auto same = mix_ambient(cap, voice, -300.0);
    CHECK(same.channels[0] == cap.channels[0]);

    // band-limited voice barely moves the tracking band (Parseval oracle)
    auto mixed = mix_ambient(cap, voice, 0.0);
    auto band = [&](const RawCapture& cc, double lo, double hi) {
        auto s = welch_psd(cc.channels[0], 16000.0, 512);
        double acc = 0.0;
        for (std::size_t k = 0; k < s.power.size(); ++k) {
            double f = static_cast<double>(k) * s.bin_width_hz;
            if (f >= lo && f <= hi) acc += s.power[k];
        }
        return acc;
    };
    double track_delta = 10.0 * std::log10(band(mixed, 6000.0, 8000.0) /
                                           band(cap, 6000.0, 8000.0));
    CHECK(std::abs(track_delta) < 1.0);
    CHECK(band(mixed, 300.0, 600.0) > 100.0 * band(cap, 300.0, 600.0));
}

TEST_CASE("scene and path validation") {
    Scene scene = free_field();
    scene.reflectors.push_back({{0.0, 1.0, 0.0}, -0.5, 1.5});
    CHECK_THROWS_AS(scene.validate(), Error);

    MotionPath p;
    p.timestamps = {0.0, 0.1, 0.05};
    p.positions = {{}, {}, {}};
    CHECK_THROWS_AS(p.validate(), Error);

    auto sched = build_constant_schedule(7000.0, 40000.0, 0.003, 0.03);
    auto tx = synthesize_transmit(sched, 192000.0);
    // beacon outside the supported range
    auto far = MotionPath::stationary({1.0, 0.0, 0.0}, 0.05);
    Scene ok = free_field();
    CHECK_THROWS_AS(propagate(ok, far, tx), Error);
    // path shorter than the waveform
    auto brief = MotionPath::stationary({0.3, 0.0, 0.0}, 0.01);
    CHECK_THROWS_AS(propagate(ok, brief, tx), Error);
}
