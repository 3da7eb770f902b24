// pipeline.hpp - end-to-end experiment runner
//
// Ties the stages together: motion synthesis, tone transmit, acoustic
// propagation, capture, demodulation, start-point search, trajectory
// tracking, optional ink recovery. Errors are re-thrown with the stage name
// prefixed so a failing experiment names the stage that broke.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cfcw/acoustic_sim.hpp"
#include "cfcw/coexistence.hpp"
#include "cfcw/config.hpp"
#include "cfcw/demod.hpp"
#include "cfcw/handwriting.hpp"
#include "cfcw/localize.hpp"
#include "cfcw/startpoint.hpp"
#include "cfcw/tx_design.hpp"
#include "cfcw/words.hpp"

namespace cfcw {

struct SimulationResult {
    ToneSchedule schedule;
    MotionPath path;
    std::optional<WordTruth> word;  // set when motion.kind == "word"
    RawCapture capture;
    ArrayGeometry geometry;
    Scene scene;
};

struct TrackResult {
    std::vector<PhaseTrack> tracks;
    StartFix fix;
    Trajectory3D trajectory;
    double frame_rate = 0.0;
};

namespace detail {

template <typename F>
auto stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(name) + ": " + e.what());
    }
}

// Speech-band stand-in: harmonic stack with slow pitch/amplitude movement
// plus band-limited noise, deterministic in the seed.
inline std::vector<double> synth_voice(double sample_rate, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> v(n, 0.0);
    double f0 = 150.0;
    for (int h = 1; h <= 12; ++h) {
        double amp = 1.0 / h;
        double phase = std::uniform_real_distribution<double>(0.0, kTwoPi)(rng);
        for (std::size_t i = 0; i < n; ++i) {
            double t = static_cast<double>(i) / sample_rate;
            double fi = f0 * (1.0 + 0.08 * std::sin(kTwoPi * 0.7 * t + h));
            double am = 0.5 + 0.5 * std::sin(kTwoPi * (1.3 + 0.1 * h) * t + phase);
            v[i] += amp * am * std::sin(kTwoPi * h * fi * t + phase);
        }
    }
    // Rough band-limited hiss: two-stage leaky integrator of white noise.
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s1 = 0.9 * s1 + 0.1 * gauss(rng);
        s2 = 0.6 * s2 + 0.4 * s1;
        v[i] += 0.8 * s2;
    }
    return v;
}

}  // namespace detail

inline ToneSchedule build_schedule(const ScheduleConfig& sc, double duration) {
    if (sc.kind == "direct")
        return build_direct_schedule(sc.base_hz, sc.hop_step_hz, sc.hop_period_s, duration,
                                     sc.capture_rate);
    if (!sc.hop)
        return build_constant_schedule(sc.receive_hz, sc.base_hz, sc.hop_period_s, duration,
                                       sc.capture_rate);
    auto schedule = build_hop_schedule(sc.receive_hz, sc.base_hz, sc.hop_step_hz, sc.hop_period_s,
                                       duration);
    schedule.hop_ramp = sc.hop_ramp_s;
    return schedule;
}

inline MotionPath build_motion(const MotionConfig& mc, double duration,
                               std::optional<WordTruth>* word_out = nullptr) {
    if (mc.kind == "static") return MotionPath::stationary(mc.position, duration);
    if (mc.kind == "line") return make_line_path(mc.position, mc.end, duration);
    if (mc.kind == "ramp")
        return make_speed_ramp_path(mc.position, mc.direction, mc.peak_speed, duration);
    if (mc.kind == "star") return make_star_path(mc.position, mc.radius, mc.edge_duration);
    WordTruth w = generate_word(mc.word);
    if (word_out) *word_out = w;
    return w.path;
}

inline SimulationResult run_simulation(const ExperimentConfig& cfg) {
    return detail::stage("simulate", [&] {
        SimulationResult out;
        out.schedule = build_schedule(cfg.schedule, cfg.duration);
        out.path = build_motion(cfg.motion, cfg.duration, &out.word);
        out.geometry = echo_array();
        out.scene.geometry = out.geometry;
        out.scene.reflectors = cfg.scene.reflectors;
        out.scene.mic_noise_snr_db = cfg.scene.snr_db;
        out.scene.max_range = cfg.scene.max_range;

        double amp2 = cfg.schedule.kind == "direct" ? 0.0 : 0.2;
        auto tx = synthesize_transmit(out.schedule, cfg.sim_rate, 1.0, amp2);
        auto pressure = propagate(out.scene, out.path, tx);
        NonlinearityModel nl;
        if (cfg.schedule.kind == "direct") nl.quadratic_gain = 0.0;
        CaptureOptions opts;
        if (cfg.schedule.kind == "cfcw") {
            opts.capture_rate = cfg.schedule.capture_rate;
            opts.pass_hz = cfg.schedule.receive_hz + 200.0;
            // The notch strips the hop-boundary burst at f_rcv + hop_step;
            // glided hops have no burst, so it would only tilt the passband.
            opts.notch_hz = cfg.schedule.hop && cfg.schedule.hop_ramp_s == 0.0
                                ? cfg.schedule.receive_hz + cfg.schedule.hop_step_hz
                                : 0.0;
        } else {
            opts = default_capture_options(cfg.schedule.capture_rate);
        }
        out.capture = capture(pressure, cfg.sim_rate, nl, opts);
        if (cfg.scene.snr_db > 0.0) add_mic_noise(out.capture, cfg.scene.snr_db, cfg.seed);
        if (cfg.scene.ambient_voice) {
            auto voice = detail::synth_voice(out.capture.sample_rate,
                                             out.capture.channels[0].size(), cfg.seed);
            out.capture =
                mix_ambient(out.capture, voice, cfg.scene.ambient_level_db, cfg.seed + 1);
        }
        return out;
    });
}

inline TrackResult run_tracking(const ExperimentConfig& cfg, const RawCapture& capture,
                                const ToneSchedule& schedule, const ArrayGeometry& geometry) {
    TrackResult out;
    Medium medium;
    out.frame_rate = 1.0 / schedule.hop_period;
    out.fix = detail::stage("start-point", [&] {
        auto spectra = frame_spectra(capture, schedule, cfg.demod, medium);
        auto diffs = pairwise_phase_differences(spectra, 0, schedule, geometry, medium);
        Workspace ws{geometry.centroid(), cfg.scene.max_range, 0.0};
        // With hopping on, the adjacent slot's frequency pins the wrap
        // integers through the 2 kHz beat; hand them to the GA as a seed.
        WrapVector hint;
        bool have_hint = false;
        if (schedule.slots.size() > 1 &&
            std::abs(schedule.slots[1].f_primary - schedule.slots[0].f_primary) > 1e-9) {
            auto diffs1 = pairwise_phase_differences(spectra, 1, schedule, geometry, medium);
            if (diffs1.pairs.size() == diffs.pairs.size()) {
                hint = two_frequency_wraps(diffs, diffs1);
                have_hint = true;
            }
        }
        StartFix fix;
        for (std::uint64_t attempt = 0; attempt < 8; ++attempt) {
            fix = solve_start_point(diffs, ws, cfg.seed + attempt * 0x9e3779b9ULL, {},
                                    have_hint ? &hint : nullptr);
            if (fix.converged) break;
        }
        return fix;
    });
    out.tracks = detail::stage("track", [&] {
        std::vector<double> d0, d2;
        for (const auto& m : geometry.mic_positions) {
            d0.push_back(distance(out.fix.position, m));
            d2.push_back(distance(geometry.secondary_source_position, m));
        }
        return demodulate(capture, schedule, d0, d2, cfg.demod, medium);
    });
    out.trajectory = detail::stage("localize", [&] {
        return track_trajectory(out.fix, out.tracks, geometry, schedule);
    });
    return out;
}

inline InkRecovery run_recovery(const Trajectory3D& trajectory,
                                const HandwritingParams& params = {}) {
    return detail::stage("recover", [&] { return recover_ink(trajectory, params); });
}

}  // namespace cfcw
