#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cfcw/demod.hpp"

using namespace cfcw;

namespace {

// Synthetic capture channel following the global phase model for a constant
// (non-hopping) schedule: x(t) = cos(2*pi*f_rcv*t - w1*d1(t)/c + w2*d2/c).
template <typename DistFn>
RawCapture model_channel(const ToneSchedule& sched, DistFn d1, double d2) {
    const double fs = 16000.0, c = 343.0;
    RawCapture cap;
    cap.sample_rate = fs;
    std::size_t n = static_cast<std::size_t>(sched.duration() * fs);
    std::vector<double> x(n);
    double w1 = kTwoPi * sched.slots[0].f_primary;
    double w2 = kTwoPi * sched.slots[0].f_secondary;
    for (std::size_t i = 0; i < n; ++i) {
        double t = static_cast<double>(i) / fs;
        x[i] = std::cos(kTwoPi * sched.receive_frequency * t - w1 * d1(t) / c + w2 * d2 / c);
    }
    cap.channels.push_back(std::move(x));
    return cap;
}

RawCapture model_channel(const ToneSchedule& sched, double d0, double v, double d2) {
    return model_channel(sched, [=](double t) { return d0 + v * t; }, d2);
}

}  // namespace

TEST_CASE("demod config invariants") {
    DemodConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.win_los = 0.0004;  // < 0.5 ms -> bin wider than 2 kHz
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.win_los = 0.0005;
    cfg.fft_bin_width_cap = 1000.0;  // cap tighter than the window provides
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = {};
    cfg.guard_samples = -1;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("static scene: one phase for all frames") {
    auto sched = build_constant_schedule(7000.0, 40000.0, 0.003, 0.3);
    auto cap = model_channel(sched, 0.30, 0.0, 0.15);
    DemodConfig cfg;
    cfg.nominal_range = 0.30;
    auto spectra = frame_spectra(cap, sched, cfg);
    REQUIRE(spectra.size() == 1);
    REQUIRE(spectra[0].size() == sched.slots.size());
    for (const auto& f : spectra[0])
        CHECK(std::abs(wrap_phase(f.wrapped_phase - spectra[0][0].wrapped_phase)) < 1e-6);
    // and the phase obeys the slot model
    auto model = build_slot_model(sched);
    CHECK(std::abs(wrap_phase(spectra[0][3].wrapped_phase -
                              model.phase(3, 0.30, 0.15, Medium{}))) < 1e-6);
}

TEST_CASE("constant radial velocity: phase ramp of slope -2pi f1 v/c") {
    const double v = 0.02, c = 343.0, f1 = 40000.0;
    auto sched = build_constant_schedule(7000.0, f1, 0.003, 0.3);
    auto cap = model_channel(sched, 0.30, v, 0.15);
    DemodConfig cfg;
    cfg.nominal_range = 0.30;
    cfg.adaptive_window = false;  // fixed window; pure spectral view
    auto spectra = frame_spectra(cap, sched, cfg);
    double expected = -kTwoPi * f1 * v / c * 0.003;  // per frame
    for (std::size_t k = 1; k < spectra[0].size(); ++k) {
        double d = wrap_phase(spectra[0][k].wrapped_phase - spectra[0][k - 1].wrapped_phase);
        CHECK(d == doctest::Approx(expected).epsilon(0.02));
    }
}

TEST_CASE("hopping makes a 0.8 ms NLOS replica invisible") {
    // A/B: same scene, with and without a beacon-path wall replica arriving
    // 0.8 ms after the LOS (win_los = 0.5 ms); the replica of the previous
    // slot's tone mixes to a spurious line away from 7 kHz
    Scene scene;
    scene.geometry = echo_array();
    scene.geometry.mic_positions = {{0.0, 0.0, 0.0}};
    scene.geometry.secondary_source_position = {0.15, 0.0, 0.0};
    Vec3 beacon{0.0, 0.30, 0.0};
    auto sched = build_hop_schedule(7000.0, 40000.0, 2000.0, 0.003, 0.3);
    auto path = MotionPath::stationary(beacon, sched.duration() + 0.01);

    auto tx_both = synthesize_transmit(sched, 192000.0, 1.0, 0.2);
    auto tx_beacon = synthesize_transmit(sched, 192000.0, 1.0, 0.0);
    auto tx_secondary = synthesize_transmit(sched, 192000.0, 0.0, 0.2);

    auto clean = propagate(scene, path, tx_both);

    // wall at y = -0.1372: image path 0.5744 m, so NLOS - LOS = 0.8 ms;
    // applied to the beacon tone only (pure replica injection)
    Scene walled = scene;
    walled.reflectors.push_back({{0.0, 1.0, 0.0}, -0.1372, 0.8});
    auto beacon_echoed = propagate(walled, path, tx_beacon);
    auto secondary_clean = propagate(scene, path, tx_secondary);
    std::vector<double> mixed(beacon_echoed[0].size());
    for (std::size_t i = 0; i < mixed.size(); ++i)
        mixed[i] = beacon_echoed[0][i] + secondary_clean[0][i];

    // deeper stopband than the default chain: what aliases near the line
    // from the transition band would otherwise dominate this tight A/B bound
    CaptureOptions opts;
    opts.atten_db = 90.0;
    auto cap_a = capture({clean[0]}, 192000.0, {1.0, 0.1}, opts);
    auto cap_b = capture({mixed}, 192000.0, {1.0, 0.1}, opts);
    DemodConfig cfg;
    cfg.nominal_range = 0.30;
    auto sa = frame_spectra(cap_a, sched, cfg);
    auto sb = frame_spectra(cap_b, sched, cfg);
    double worst = 0.0;
    for (std::size_t k = 2; k < sa[0].size(); ++k)
        worst = std::max(worst, std::abs(wrap_phase(sb[0][k].wrapped_phase -
                                                    sa[0][k].wrapped_phase)));
    CHECK(worst < 1e-3);
}

TEST_CASE("unwrap_phase: static and exact ramps") {
    std::vector<double> flat(20, 0.7);
    auto r = unwrap_phase(flat);
    CHECK(r.reliable);
    for (double u : r.unwrapped) CHECK(u == doctest::Approx(0.7));

    // per-step slope grows slowly to 1.5*pi: classic unwrapping picks the
    // wrong wrap once |step| > pi, the velocity aid keeps following
    std::vector<double> truth{0.0};
    for (int k = 1; k < 60; ++k) {
        double slope = std::min(0.15 * k, 1.5) * kPi;
        truth.push_back(truth.back() + slope);
    }
    std::vector<double> wrapped;
    for (double u : truth) wrapped.push_back(wrap_phase(u));

    auto aided = unwrap_phase(wrapped, true);
    CHECK(aided.reliable);
    for (std::size_t k = 0; k < truth.size(); ++k)
        CHECK(aided.unwrapped[k] - aided.unwrapped[0] ==
              doctest::Approx(truth[k]).epsilon(1e-9));

    auto classic = unwrap_phase(wrapped, false);
    CHECK(std::abs(classic.unwrapped.back() - classic.unwrapped[0] - truth.back()) > kPi);
}

TEST_CASE("unwrap_phase flags steps past the aided ceiling") {
    std::vector<double> truth{0.0};
    for (int k = 1; k < 40; ++k) {
        double slope = std::min(0.3 * k, 2.3) * kPi;  // beyond 2*pi per step
        truth.push_back(truth.back() + slope);
    }
    std::vector<double> wrapped;
    for (double u : truth) wrapped.push_back(wrap_phase(u));
    auto r = unwrap_phase(wrapped, true);
    CHECK_FALSE(r.reliable);
}

TEST_CASE("track_range follows the model channel") {
    const double d0 = 0.30, v = 0.05;
    auto sched = build_constant_schedule(7000.0, 40000.0, 0.003, 0.45);
    auto cap = model_channel(sched, d0, v, 0.15);
    auto track = track_range(cap.channels[0], 16000.0, sched, d0, 0.15);
    REQUIRE(track.distance.size() == sched.slots.size());
    CHECK_FALSE(track.unreliable);
    // measurements lag slot starts by the window offset (~1.4 ms of travel)
    CHECK(std::abs(track.distance[0] - d0) < 150e-6);
    for (std::size_t k = 1; k < track.distance.size(); ++k)
        CHECK(track.distance[k] - track.distance[0] ==
              doctest::Approx(v * 0.003 * static_cast<double>(k)).epsilon(1e-4));
}

TEST_CASE("track_range flags motion past the aided ceiling") {
    // accelerate from rest through 2.86 m/s: the tracker follows until a
    // slot-to-slot step reaches a full wavelength (8.6 mm at 40 kHz)
    auto sched = build_constant_schedule(7000.0, 40000.0, 0.003, 0.05);
    auto cap = model_channel(
        sched, [](double t) { return 0.25 + 50.0 * t * t; }, 0.15);
    auto track = track_range(cap.channels[0], 16000.0, sched, 0.25, 0.15);
    CHECK(track.unreliable);
    CHECK(track.unreliable_from < track.distance.size());
}

TEST_CASE("errors: truncated capture, mismatched demodulate inputs") {
    auto sched = build_constant_schedule(7000.0, 40000.0, 0.003, 0.3);
    auto cap = model_channel(sched, 0.30, 0.0, 0.15);
    cap.channels[0].resize(cap.channels[0].size() / 2);
    DemodConfig cfg;
    cfg.nominal_range = 0.30;
    try {
        frame_spectra(cap, sched, cfg);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.kind() == "truncated-capture");
    }

    auto ok = model_channel(sched, 0.30, 0.0, 0.15);
    CHECK_THROWS_AS(demodulate(ok, sched, {0.3, 0.3}, {0.15}), Error);
}
