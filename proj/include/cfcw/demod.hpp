// demod.hpp - framed single-bin phase estimation and range tracking
//
// One frame per hop slot per microphone. The coefficient is an exact
// least-squares fit of cos/sin at the slot's receive frequency over the
// WIN-LOS window (the multipath-free slice right after the LOS arrival),
// which keeps the negative-frequency image and the hop spurs out of the
// estimate. Because the transmit tones are phase-continuous, the measured
// phase of every slot follows one global model
//
//   phi_k = psi1_k - psi2_k - w1_k d1/c + w2_k d2/c - w_rcv t_k
//
// (psi = accumulated transmit phase at the slot start), so ranges are
// tracked slot by slot: predict d1, subtract the model phase, and the
// wrapped innovation is the range correction. The prediction is either the
// last range (classic) or a velocity extrapolation (aided), which doubles
// the speed ceiling.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "cfcw/acoustic_sim.hpp"
#include "cfcw/signal_core.hpp"
#include "cfcw/tx_design.hpp"

namespace cfcw {

struct DemodConfig {
    double win_los = 0.0005;            // s; >= 0.5 ms keeps the bin width <= 2 kHz
    double fft_bin_width_cap = 2000.0;  // Hz
    double nominal_range = 0.35;        // m; places the window before tracking locks on
    int guard_samples = 4;              // slack between LOS arrival and window start
    double snr_floor_rel = 0.05;        // low-snr flag below this fraction of median magnitude
    bool velocity_aided = true;
    int velocity_window = 6;            // recent frames feeding the velocity estimate
    double velocity_decay = 0.7;        // exponential weight per frame of age
    bool adaptive_window = true;        // anchor the window at the tracked range

    void validate() const {
        if (win_los < 0.0005 - 1e-12)
            throw Error("invalid-configuration", "win_los must be at least 0.5 ms");
        if (1.0 / win_los > fft_bin_width_cap + 1e-9)
            throw Error("invalid-configuration", "window shorter than the bin width cap allows");
        if (guard_samples < 0 || velocity_window < 1)
            throw Error("invalid-configuration", "bad demod parameters");
    }
};

struct FrameCoeff {
    std::size_t slot = 0;
    std::complex<double> coeff;   // amplitude/phase of the tracked line
    double wrapped_phase = 0.0;   // arg(coeff), [-pi, pi]
    double magnitude = 0.0;
    bool low_snr = false;
};

// Accumulated transmit phases at each slot start, matching the
// phase-continuous synthesis in synthesize_transmit.
struct SlotPhaseModel {
    std::vector<double> psi1, psi2;  // per slot
    const ToneSchedule* schedule = nullptr;

    double phase(std::size_t k, double d1, double d2, const Medium& medium) const {
        const auto& s = schedule->slots[k];
        double t_k = static_cast<double>(k) * schedule->hop_period;
        double w1 = kTwoPi * s.f_primary;
        double w2 = kTwoPi * s.f_secondary;
        double w_fit = kTwoPi * schedule->slot_receive_frequency(k);
        return psi1[k] - psi2[k] - w1 * d1 / medium.speed_of_sound +
               w2 * d2 / medium.speed_of_sound - w_fit * t_k;
    }
};

inline SlotPhaseModel build_slot_model(const ToneSchedule& schedule) {
    SlotPhaseModel m;
    m.schedule = &schedule;
    double p1 = 0.0, p2 = 0.0;
    for (const auto& s : schedule.slots) {
        m.psi1.push_back(p1);
        m.psi2.push_back(p2);
        p1 += kTwoPi * s.f_primary * schedule.hop_period;
        p2 += kTwoPi * s.f_secondary * schedule.hop_period;
    }
    return m;
}

namespace detail {

// Least-squares fit x ~ a cos(w t) + b sin(w t) + baseline over
// [start, start+win), with t in absolute sample units. Returns a - ib so
// x ~ |c| cos(w t + arg c). The constant + linear baseline absorbs the
// square-law DC component and the DC-blocker settling transient, which
// otherwise bias the earliest frames; unlike a single-bin projection the
// fit stays exact when the window does not hold an integer number of
// cycles.
inline std::complex<double> fit_tone(const std::vector<double>& x, std::size_t start,
                                     std::size_t win, double omega_per_sample) {
    double g[4][4] = {};
    double rhs[4] = {};
    const double mid = 0.5 * static_cast<double>(win - 1);
    for (std::size_t i = 0; i < win; ++i) {
        double ph = omega_per_sample * static_cast<double>(start + i);
        double u[4] = {std::cos(ph), std::sin(ph), 1.0,
                       (static_cast<double>(i) - mid) / static_cast<double>(win)};
        for (int a = 0; a < 4; ++a) {
            rhs[a] += x[start + i] * u[a];
            for (int b = a; b < 4; ++b) g[a][b] += u[a] * u[b];
        }
    }
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < a; ++b) g[a][b] = g[b][a];
    // Gaussian elimination with partial pivoting, 4x4.
    double m[4][5];
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) m[a][b] = g[a][b];
        m[a][4] = rhs[a];
    }
    for (int c = 0; c < 4; ++c) {
        int piv = c;
        for (int r = c + 1; r < 4; ++r)
            if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
        if (std::abs(m[piv][c]) < 1e-14) return {0.0, 0.0};
        std::swap(m[piv], m[c]);
        for (int r = 0; r < 4; ++r) {
            if (r == c) continue;
            double f = m[r][c] / m[c][c];
            for (int cc = c; cc < 5; ++cc) m[r][cc] -= f * m[c][cc];
        }
    }
    return {m[0][4] / m[0][0], -m[1][4] / m[1][1]};
}

inline void flag_low_snr(std::vector<FrameCoeff>& frames, double floor_rel) {
    std::vector<double> mags;
    for (const auto& f : frames) mags.push_back(f.magnitude);
    std::sort(mags.begin(), mags.end());
    double med = mags.empty() ? 0.0 : mags[mags.size() / 2];
    for (auto& f : frames) f.low_snr = f.magnitude < floor_rel * med;
}

// A hopped multipath replica self-mixes with the live tone into a line at
// exactly the hop step, and a window short enough for NLOS rejection cannot
// project that line out (half-integer cycles against the receive basis).
// A 3-tap zero at the step removes it; the filter's complex gain at the fit
// frequency is divided back out of each coefficient, so phases are unbiased.
inline double hop_step_hz(const ToneSchedule& schedule) {
    for (std::size_t k = 1; k < schedule.slots.size(); ++k) {
        double d = std::abs(schedule.slots[k].f_primary - schedule.slots[0].f_primary);
        if (d > 0.0) return d;
    }
    return 0.0;
}

inline std::vector<double> notch_step(const std::vector<double>& x, double w0) {
    double c = -2.0 * std::cos(w0);
    std::vector<double> y(x.size(), 0.0);
    for (std::size_t i = 2; i < x.size(); ++i) y[i] = x[i] + c * x[i - 1] + x[i - 2];
    return y;
}

inline std::complex<double> notch_step_gain(double w0, double w) {
    std::complex<double> z = std::exp(std::complex<double>(0.0, -w));
    return 1.0 - 2.0 * std::cos(w0) * z + z * z;
}

}  // namespace detail

// Per-mic, per-slot coefficients with the window placed from nominal_range.
// Used for the start-point fix (wrapped phases only) and for diagnostics;
// range tracking re-measures with adaptive window placement.
inline std::vector<std::vector<FrameCoeff>> frame_spectra(const RawCapture& cap,
                                                          const ToneSchedule& schedule,
                                                          const DemodConfig& cfg,
                                                          const Medium& medium = {}) {
    cfg.validate();
    medium.validate();
    const double fs = cap.sample_rate;
    const std::size_t slot_len = static_cast<std::size_t>(std::llround(schedule.hop_period * fs));
    if (std::abs(slot_len - schedule.hop_period * fs) > 1e-6)
        throw Error("invalid-configuration", "hop period must be a whole number of samples");
    const std::size_t win = static_cast<std::size_t>(std::llround(cfg.win_los * fs));
    const std::size_t offset =
        static_cast<std::size_t>(std::llround(cfg.nominal_range / medium.speed_of_sound * fs)) +
        static_cast<std::size_t>(std::llround(schedule.hop_ramp * fs)) +
        static_cast<std::size_t>(cfg.guard_samples);
    if (offset + win > slot_len)
        throw Error("invalid-configuration", "analysis window does not fit inside a hop slot");
    const double step = detail::hop_step_hz(schedule);
    const double w_step = kTwoPi * step / fs;

    std::vector<std::vector<FrameCoeff>> mics;
    for (const auto& raw : cap.channels) {
        const auto x = step > 0.0 ? detail::notch_step(raw, w_step) : raw;
        std::vector<FrameCoeff> frames;
        for (std::size_t k = 0; k < schedule.slots.size(); ++k) {
            std::size_t start = k * slot_len + offset;
            if (start + win > x.size()) {
                if (k + 1 < schedule.slots.size())
                    throw Error("truncated-capture", "capture ends before the schedule");
                break;
            }
            FrameCoeff f;
            f.slot = k;
            double w_fit = kTwoPi * schedule.slot_receive_frequency(k) / fs;
            f.coeff = detail::fit_tone(x, start, win, w_fit);
            if (step > 0.0) f.coeff /= detail::notch_step_gain(w_step, w_fit);
            f.wrapped_phase = std::arg(f.coeff);
            f.magnitude = std::abs(f.coeff);
            frames.push_back(f);
        }
        detail::flag_low_snr(frames, cfg.snr_floor_rel);
        mics.push_back(std::move(frames));
    }
    return mics;
}

struct PhaseTrack {
    std::vector<FrameCoeff> frames;   // one per slot
    std::vector<double> distance;     // absolute beacon-to-mic range, meters
    std::vector<double> innovation;   // wrapped phase residual per frame
    std::vector<std::uint8_t> valid;
    bool unreliable = false;          // implied speed crossed the unwrap ceiling
    std::size_t unreliable_from = static_cast<std::size_t>(-1);
};

namespace detail {

// Weighted least-squares slope of the recent ranges; the velocity aid.
inline double range_slope(const std::vector<double>& d, std::size_t k, int window,
                          double decay) {
    if (k < 2) return 0.0;
    std::size_t m = std::min<std::size_t>(k, static_cast<std::size_t>(window) + 1);
    double sw = 0, st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < m; ++i) {
        double w = std::pow(decay, static_cast<double>(i));
        double t = -static_cast<double>(i);
        double y = d[k - 1 - i];
        sw += w;
        st += w * t;
        sy += w * y;
        stt += w * t * t;
        sty += w * t * y;
    }
    double denom = sw * stt - st * st;
    return denom > 1e-12 ? (sw * sty - st * sy) / denom : 0.0;
}

}  // namespace detail

// Tracks one microphone's absolute range across the capture, seeded with the
// range at slot 0 (from the start-point fix or ground truth). An estimated
// per-slot range step of a full wavelength or more implies the beacon
// crossed the aided unwrap ceiling; the track is flagged from that frame on.
inline PhaseTrack track_range(const std::vector<double>& channel, double sample_rate,
                              const ToneSchedule& schedule, double initial_distance,
                              double secondary_distance, const DemodConfig& cfg = {},
                              const Medium& medium = {}) {
    cfg.validate();
    medium.validate();
    const double fs = sample_rate;
    const double c = medium.speed_of_sound;
    const std::size_t slot_len = static_cast<std::size_t>(std::llround(schedule.hop_period * fs));
    const std::size_t win = static_cast<std::size_t>(std::llround(cfg.win_los * fs));
    auto model = build_slot_model(schedule);
    const double step = detail::hop_step_hz(schedule);
    const double w_step = kTwoPi * step / fs;
    const auto x = step > 0.0 ? detail::notch_step(channel, w_step) : channel;

    PhaseTrack track;
    double d_prev = initial_distance;
    for (std::size_t k = 0; k < schedule.slots.size(); ++k) {
        double slope = cfg.velocity_aided
                           ? detail::range_slope(track.distance, k, cfg.velocity_window,
                                                 cfg.velocity_decay)
                           : 0.0;
        double d_pred = k == 0 ? initial_distance : d_prev + slope;
        double anchor = cfg.adaptive_window ? d_pred : cfg.nominal_range;
        std::size_t start = k * slot_len +
                            static_cast<std::size_t>(std::llround(anchor / c * fs)) +
                            static_cast<std::size_t>(std::llround(schedule.hop_ramp * fs)) +
                            static_cast<std::size_t>(cfg.guard_samples);
        if (start + win > x.size()) {
            if (k + 1 < schedule.slots.size())
                throw Error("truncated-capture", "capture ends before the schedule");
            break;
        }
        FrameCoeff f;
        f.slot = k;
        double w_fit = kTwoPi * schedule.slot_receive_frequency(k) / fs;
        f.coeff = detail::fit_tone(x, start, win, w_fit);
        if (step > 0.0) f.coeff /= detail::notch_step_gain(w_step, w_fit);
        f.wrapped_phase = std::arg(f.coeff);
        f.magnitude = std::abs(f.coeff);

        double w1 = kTwoPi * schedule.slots[k].f_primary;
        double innov = wrap_phase(f.wrapped_phase -
                                  model.phase(k, d_pred, secondary_distance, medium));
        double d_k = d_pred - innov * c / w1;
        if (k > 0) {
            double lambda1 = c / schedule.slots[k].f_primary;
            if (std::abs(d_k - d_prev) >= 0.98 * lambda1 && !track.unreliable) {
                track.unreliable = true;
                track.unreliable_from = k;
            }
        }
        track.frames.push_back(f);
        track.distance.push_back(d_k);
        track.innovation.push_back(innov);
        track.valid.push_back(1);
        d_prev = d_k;
    }
    detail::flag_low_snr(track.frames, cfg.snr_floor_rel);
    for (std::size_t k = 0; k < track.frames.size(); ++k)
        if (track.frames[k].low_snr) track.valid[k] = 0;
    return track;
}

// Capture in, per-mic range tracks out. initial_distances come from the
// start-point fix; secondary_distances from the known array geometry.
inline std::vector<PhaseTrack> demodulate(const RawCapture& cap, const ToneSchedule& schedule,
                                          const std::vector<double>& initial_distances,
                                          const std::vector<double>& secondary_distances,
                                          const DemodConfig& cfg = {},
                                          const Medium& medium = {}) {
    if (initial_distances.size() != cap.channels.size() ||
        secondary_distances.size() != cap.channels.size())
        throw Error("invalid-argument", "one initial and secondary distance per channel");
    std::vector<PhaseTrack> tracks;
    for (std::size_t m = 0; m < cap.channels.size(); ++m)
        tracks.push_back(track_range(cap.channels[m], cap.sample_rate, schedule,
                                     initial_distances[m], secondary_distances[m], cfg,
                                     medium));
    return tracks;
}

struct UnwrapResult {
    std::vector<double> unwrapped;
    bool reliable = true;
};

// Generic wrapped-phase stream unwrapping. Classic mode always takes the
// nearest wrap; the velocity-aided mode extrapolates the recent phase slope
// and allows one extra wrap in either direction, doubling the speed ceiling.
// A chosen step of 2*pi or more marks the stream unreliable.
inline UnwrapResult unwrap_phase(const std::vector<double>& wrapped, bool velocity_aided = true,
                                 int velocity_window = 5, double velocity_decay = 0.7) {
    UnwrapResult r;
    if (wrapped.empty()) return r;
    r.unwrapped.reserve(wrapped.size());
    r.unwrapped.push_back(wrapped[0]);
    for (std::size_t k = 1; k < wrapped.size(); ++k) {
        double d = wrap_phase(wrapped[k] - wrapped[k - 1]);
        double step = d;
        if (velocity_aided && k >= 2) {
            double pred = detail::range_slope(r.unwrapped, k, velocity_window, velocity_decay);
            double best = d;
            for (double cand : {d - kTwoPi, d, d + kTwoPi})
                if (std::abs(cand - pred) < std::abs(best - pred)) best = cand;
            step = best;
            if (std::abs(step) >= kTwoPi - 1e-9) r.reliable = false;
        }
        r.unwrapped.push_back(r.unwrapped.back() + step);
    }
    return r;
}

}  // namespace cfcw
