// acoustic_sim.hpp - ground-truth wave propagation and nonlinear capture
//
// Propagates the beacon (moving) and secondary (fixed) tones to each
// microphone with per-sample time-varying delay, so Doppler falls out of the
// geometry instead of being modeled separately. First-order image sources
// supply the delayed multipath replicas that the hopping scheme must reject.
// The capture stage applies y = A1*x + A2*x^2, a linear-phase anti-alias
// low-pass (group delay subtracted), decimation to the voice-assistant rate,
// and a DC blocker standing in for the mic's AC coupling.

#pragma once

#include <cstdint>
#include <future>
#include <random>
#include <vector>

#include "cfcw/fir.hpp"
#include "cfcw/signal_core.hpp"
#include "cfcw/tx_design.hpp"

namespace cfcw {

struct ArrayGeometry {
    std::vector<Vec3> mic_positions;
    Vec3 secondary_source_position;
    Vec3 up_axis{0.0, 0.0, 1.0};

    Vec3 centroid() const {
        Vec3 c;
        for (const auto& m : mic_positions) c += m;
        return c * (1.0 / static_cast<double>(mic_positions.size()));
    }

    void validate_standard() const {
        if (mic_positions.size() != 7)
            throw Error("invalid-configuration", "standard array has exactly 7 microphones");
        Vec3 c = centroid();
        if (std::abs(distance(secondary_source_position, c) - 0.15) > 1e-6)
            throw Error("invalid-configuration", "secondary source must sit 15 cm from centroid");
        double dmin = 1e9;
        for (std::size_t i = 0; i < mic_positions.size(); ++i)
            for (std::size_t j = i + 1; j < mic_positions.size(); ++j)
                dmin = std::min(dmin, distance(mic_positions[i], mic_positions[j]));
        if (std::abs(dmin - 0.036) > 1e-6)
            throw Error("invalid-configuration", "characteristic mic spacing must be 3.6 cm");
    }
};

// 6 mics on a 3.6 cm circle plus one center mic, secondary speaker coplanar
// 15 cm away along +x. The exact 7-mic layout of the commercial array is not
// published; the ring+center arrangement keeps the 3.6 cm characteristic
// spacing (adjacent ring mics are one radius apart).
inline ArrayGeometry echo_array(double ring_radius = 0.036, double secondary_offset = 0.15) {
    ArrayGeometry g;
    g.mic_positions.push_back({0.0, 0.0, 0.0});
    for (int k = 0; k < 6; ++k) {
        double a = kTwoPi * k / 6.0;
        g.mic_positions.push_back({ring_radius * std::cos(a), ring_radius * std::sin(a), 0.0});
    }
    g.secondary_source_position = {secondary_offset, 0.0, 0.0};
    return g;
}

struct Reflector {
    Vec3 normal{0.0, 0.0, 1.0};  // unit
    double offset = 0.0;          // plane: normal . x = offset
    double coefficient = 0.5;     // [0, 1]

    double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }
    Vec3 mirror(const Vec3& p) const { return p - normal * (2.0 * signed_distance(p)); }
};

struct AttenuationModel {
    double spreading_exponent = 1.0;       // amplitude ~ 1/r^e
    double absorption_db_per_m_khz = 0.0;  // extra frequency-dependent loss

    void validate() const {
        if (spreading_exponent < 0 || absorption_db_per_m_khz < 0)
            throw Error("invalid-configuration", "attenuation must be non-negative");
    }
};

struct Scene {
    Medium medium;
    ArrayGeometry geometry;
    std::vector<Reflector> reflectors;
    AttenuationModel attenuation;
    double mic_noise_snr_db = 40.0;  // self-noise re: tracking line; <=0 disables
    double max_range = 0.70;         // supported beacon range from centroid

    void validate() const {
        medium.validate();
        attenuation.validate();
        if (geometry.mic_positions.empty())
            throw Error("invalid-configuration", "scene needs at least one microphone");
        for (const auto& r : reflectors)
            if (r.coefficient < 0 || r.coefficient > 1)
                throw Error("invalid-configuration", "reflection coefficient outside [0,1]");
    }
};

struct MotionPath {
    std::vector<double> timestamps;  // uniform, strictly increasing
    std::vector<Vec3> positions;

    void validate() const {
        if (timestamps.size() != positions.size() || timestamps.empty())
            throw Error("invalid-argument", "path timestamps/positions mismatch");
        for (std::size_t i = 1; i < timestamps.size(); ++i)
            if (!(timestamps[i] > timestamps[i - 1]))
                throw Error("invalid-argument", "path timestamps must be strictly increasing");
    }

    double duration() const { return timestamps.back() - timestamps.front(); }

    Vec3 at(double t) const {
        if (t <= timestamps.front()) return positions.front();
        if (t >= timestamps.back()) return positions.back();
        std::size_t lo = 0, hi = timestamps.size() - 1;
        while (hi - lo > 1) {
            std::size_t mid = (lo + hi) / 2;
            (timestamps[mid] <= t ? lo : hi) = mid;
        }
        double a = (t - timestamps[lo]) / (timestamps[lo + 1] - timestamps[lo]);
        return positions[lo] * (1.0 - a) + positions[lo + 1] * a;
    }

    double max_speed() const {
        double vmax = 0.0;
        for (std::size_t i = 1; i < positions.size(); ++i)
            vmax = std::max(vmax, distance(positions[i], positions[i - 1]) /
                                      (timestamps[i] - timestamps[i - 1]));
        return vmax;
    }

    static MotionPath stationary(const Vec3& p, double duration, double frame_rate = 1000.0) {
        MotionPath path;
        std::size_t n = static_cast<std::size_t>(std::ceil(duration * frame_rate)) + 1;
        for (std::size_t i = 0; i < n; ++i) {
            path.timestamps.push_back(static_cast<double>(i) / frame_rate);
            path.positions.push_back(p);
        }
        return path;
    }
};

struct RawCapture {
    double sample_rate = 16000.0;
    std::vector<std::vector<double>> channels;

    double duration() const {
        return channels.empty() ? 0.0 : static_cast<double>(channels[0].size()) / sample_rate;
    }
};

namespace detail {

inline double absorption_gain(double freq_hz, double r, const AttenuationModel& att) {
    if (att.absorption_db_per_m_khz == 0.0) return 1.0;
    double db = att.absorption_db_per_m_khz * (freq_hz / 1000.0) * r;
    return std::pow(10.0, -db / 20.0);
}

struct PropagationSource {
    const std::vector<double>* wave;
    bool moving;        // mirror the beacon per-sample if reflected
    Vec3 fixed_pos;     // position (or image position) when not moving
    const Reflector* via;  // nullptr for the direct path
    double gain_coeff;  // reflection coefficient product
    double carrier_hz;  // representative frequency for absorption
};

}  // namespace detail

// Per-mic pressure series at the transmit sample rate. Each mic signal is the
// sum over paths of the attenuated, fractionally-delayed source signal; the
// moving beacon's delay varies per sample.
inline std::vector<std::vector<double>> propagate(const Scene& scene, const MotionPath& path,
                                                  const TransmitWaveforms& tx) {
    scene.validate();
    path.validate();
    double tx_dur = static_cast<double>(tx.primary_samples.size()) / tx.sample_rate;
    if (path.duration() + 1e-9 < tx_dur)
        throw Error("invalid-argument", "motion path shorter than transmit waveform");
    Vec3 center = scene.geometry.centroid();
    for (const auto& p : path.positions) {
        if (distance(p, center) > scene.max_range + 1e-9)
            throw Error("invalid-scene", "beacon leaves the supported range");
        for (const auto& r : scene.reflectors) {
            // image-source model needs the beacon on the array's side
            double side = r.signed_distance(center) < 0.0 ? -1.0 : 1.0;
            if (side * r.signed_distance(p) < 1e-3)
                throw Error("invalid-scene", "beacon collides with a reflector plane");
        }
    }

    // Representative carrier for the (narrowband) absorption model; the model
    // defaults to zero absorption, a mid-band constant is adequate when on.
    double f_primary = tx.sample_rate / 4.0;
    double f_secondary = tx.sample_rate / 4.0;

    std::vector<detail::PropagationSource> sources;
    sources.push_back({&tx.primary_samples, true, {}, nullptr, 1.0, f_primary});
    sources.push_back({&tx.secondary_samples, false, scene.geometry.secondary_source_position,
                       nullptr, 1.0, f_secondary});
    for (const auto& r : scene.reflectors) {
        sources.push_back({&tx.primary_samples, true, {}, &r, r.coefficient, f_primary});
        sources.push_back({&tx.secondary_samples, false,
                           r.mirror(scene.geometry.secondary_source_position), &r, r.coefficient,
                           f_secondary});
    }

    const double fs = tx.sample_rate;
    const double c = scene.medium.speed_of_sound;
    const std::size_t n = tx.primary_samples.size();
    const dsp::SincInterpolator interp;

    // Beacon position per output sample, computed once for all mics.
    std::vector<Vec3> beacon(n);
    for (std::size_t i = 0; i < n; ++i) beacon[i] = path.at(static_cast<double>(i) / fs);

    auto render_mic = [&](const Vec3& mic) {
        std::vector<double> out(n, 0.0);
        for (const auto& src : sources) {
            if (src.moving) {
                for (std::size_t i = 0; i < n; ++i) {
                    double t = static_cast<double>(i) / fs;
                    Vec3 p = beacon[i];
                    if (src.via) p = src.via->mirror(p);
                    double r = distance(p, mic);
                    double g = src.gain_coeff / std::pow(std::max(r, 1e-4), scene.attenuation.spreading_exponent) *
                               detail::absorption_gain(src.carrier_hz, r, scene.attenuation);
                    out[i] += g * interp(*src.wave, (t - r / c) * fs);
                }
            } else {
                double r = distance(src.fixed_pos, mic);
                double g = src.gain_coeff / std::pow(std::max(r, 1e-4), scene.attenuation.spreading_exponent) *
                           detail::absorption_gain(src.carrier_hz, r, scene.attenuation);
                double delay_samples = (r / c) * fs;
                for (std::size_t i = 0; i < n; ++i)
                    out[i] += g * interp(*src.wave, static_cast<double>(i) - delay_samples);
            }
        }
        return out;
    };

    std::vector<std::future<std::vector<double>>> jobs;
    for (const auto& mic : scene.geometry.mic_positions)
        jobs.push_back(std::async(std::launch::async, render_mic, mic));
    std::vector<std::vector<double>> mics;
    for (auto& j : jobs) mics.push_back(j.get());
    return mics;
}

// The anti-alias filter is deliberately short (half-width ~0.15 ms) so the
// measurement window can sit between the hop-boundary transient and the
// earliest NLOS arrival; a cascaded zero-phase 3-tap notch takes out the one
// spur frequency (f_rcv + hop_step) that would fold exactly onto f_rcv after
// decimation. Everything above stop_hz (ultrasound leftovers) gets the full
// stopband attenuation.
struct CaptureOptions {
    double capture_rate = 16000.0;
    double pass_hz = 7200.0;   // anti-alias passband edge
    double stop_hz = 22000.0;  // >= atten_db beyond this
    double atten_db = 70.0;
    double notch_hz = 9000.0;  // exact zero; 0 disables
};

inline CaptureOptions default_capture_options(double capture_rate = 16000.0) {
    CaptureOptions o;
    o.capture_rate = capture_rate;
    if (capture_rate != 16000.0) {  // wide-band (direct) capture
        o.pass_hz = 0.45 * capture_rate;
        o.stop_hz = 1.0 * capture_rate;
        o.notch_hz = 0.0;
    }
    return o;
}

// Square-law capture followed by anti-alias filtering, decimation and DC
// blocking. Total per sample; the output's 7 kHz line carries the phase
// difference of the arriving tone pair.
inline RawCapture capture(const std::vector<std::vector<double>>& pressure, double input_rate,
                          const NonlinearityModel& nl, const CaptureOptions& opts = {}) {
    nl.validate();
    if (pressure.empty()) throw Error("invalid-argument", "no input channels");
    double factor_d = input_rate / opts.capture_rate;
    std::size_t factor = static_cast<std::size_t>(std::llround(factor_d));
    if (std::abs(factor_d - static_cast<double>(factor)) > 1e-9 || factor == 0)
        throw Error("invalid-configuration", "capture rate must divide the input rate");
    auto h = dsp::design_lowpass({input_rate, opts.pass_hz, opts.stop_hz, opts.atten_db});
    if (opts.notch_hz > 0.0) {
        // Cascade with [1, -2cos(w0), 1]/(2 - 2cos(w0)): exact zero at the
        // notch, unit DC gain, zero phase; keeps the total length odd.
        double c0 = std::cos(kTwoPi * opts.notch_hz / input_rate);
        double norm = 2.0 - 2.0 * c0;
        std::vector<double> cascade(h.size() + 2, 0.0);
        for (std::size_t i = 0; i < h.size(); ++i) {
            cascade[i] += h[i] / norm;
            cascade[i + 1] += h[i] * (-2.0 * c0) / norm;
            cascade[i + 2] += h[i] / norm;
        }
        h = std::move(cascade);
    }

    RawCapture cap;
    cap.sample_rate = opts.capture_rate;
    auto render = [&](const std::vector<double>& x) {
        std::vector<double> sq(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            sq[i] = nl.linear_gain * x[i] + nl.quadratic_gain * x[i] * x[i];
        auto y = dsp::filter_decimate(sq, h, factor);
        // Two passes: the square-law DC term drifts with beacon motion, and a
        // single pole leaves too much of that drift in the voice band.
        dsp::dc_block(y);
        dsp::dc_block(y);
        return y;
    };
    std::vector<std::future<std::vector<double>>> jobs;
    for (const auto& ch : pressure) jobs.push_back(std::async(std::launch::async, render, ch));
    for (auto& j : jobs) cap.channels.push_back(j.get());
    return cap;
}

// Additive white self-noise at an SNR measured against the strongest spectral
// line of each channel (estimated from the channel RMS, which the tracking
// line dominates in a quiet capture). Deterministic per (seed, channel).
inline void add_mic_noise(RawCapture& cap, double snr_db, std::uint64_t seed) {
    if (snr_db <= 0.0) return;
    for (std::size_t ch = 0; ch < cap.channels.size(); ++ch) {
        auto& x = cap.channels[ch];
        double power = 0.0;
        for (double v : x) power += v * v;
        power /= static_cast<double>(x.size());
        double sigma = std::sqrt(power) * std::pow(10.0, -snr_db / 20.0);
        std::seed_seq sq{seed, static_cast<std::uint64_t>(ch)};
        std::mt19937_64 rng;
        rng.seed(sq);
        std::normal_distribution<double> gauss(0.0, sigma);
        for (double& v : x) v += gauss(rng);
    }
}

// Additive ambient mix at a level in dB relative to the capture's own RMS
// reference (0 dB = equal power). -inf (represented by NaN or <= -200)
// leaves the capture untouched.
inline RawCapture mix_ambient(const RawCapture& cap, const std::vector<double>& noise,
                              double level_db, std::uint64_t seed = 0) {
    RawCapture out = cap;
    if (!std::isfinite(level_db) || level_db <= -200.0) return out;
    double ref_power = 0.0;
    for (const auto& ch : cap.channels)
        for (double v : ch) ref_power += v * v;
    ref_power /= static_cast<double>(cap.channels.size() * cap.channels[0].size());
    double noise_power = 0.0;
    for (double v : noise) noise_power += v * v;
    noise_power /= static_cast<double>(noise.size());
    if (noise_power <= 0.0) return out;
    double gain = std::sqrt(ref_power / noise_power) * std::pow(10.0, level_db / 20.0);
    std::mt19937_64 rng(seed);
    for (auto& ch : out.channels) {
        // Same ambient field at every mic up to a per-channel sample offset.
        std::size_t off = noise.size() > 1 ? static_cast<std::size_t>(rng() % noise.size()) : 0;
        for (std::size_t i = 0; i < ch.size(); ++i)
            ch[i] += gain * noise[(i + off) % noise.size()];
    }
    return out;
}

}  // namespace cfcw
