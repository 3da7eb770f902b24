// tx_design.hpp - dual-tone transmit plan with transparent frequency hopping
//
// A ToneSchedule is a sequence of (f_primary, f_secondary) slots with a
// constant difference f_rcv. Both tones hop together every hop_period, so the
// difference tone created by the microphone nonlinearity never changes
// frequency while delayed multipath replicas mix to a harmless spur.

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "cfcw/signal_core.hpp"

namespace cfcw {

struct ToneSlot {
    double f_primary = 0.0;    // Hz (beacon / stylus tone)
    double f_secondary = 0.0;  // Hz (fixed near-array tone; 0 in direct mode)
};

enum class ScheduleKind {
    cfcw,   // dual tones, received line at f_primary - f_secondary
    direct  // single audible-capture tone, tracked at f_primary itself
};

struct ToneSchedule {
    ScheduleKind kind = ScheduleKind::cfcw;
    double hop_period = 0.003;         // s
    double receive_frequency = 7000.0; // Hz (CFCW); ignored in direct mode
    // Raised-cosine frequency glide at each slot start instead of an
    // instantaneous switch. Both tones glide together so the transmitted
    // difference never leaves f_rcv; at a microphone, the path-delay skew
    // between beacon and secondary turns the glide into a small in-band FM
    // excursion (peak 2*hop_step*skew/hop_ramp) instead of a full-amplitude
    // burst at f_rcv +- hop_step. Zero keeps sharp hops, whose boundary
    // transient is better for multipath rejection; the coexistence
    // configuration trades the wider exclusion zone for spectral purity.
    double hop_ramp = 0.0;             // s
    std::vector<ToneSlot> slots;

    double duration() const { return hop_period * static_cast<double>(slots.size()); }

    // Demodulation frequency of a slot: the difference line for CFCW, the
    // tone itself for the direct (no-nonlinearity) mode.
    double slot_receive_frequency(std::size_t k) const {
        return kind == ScheduleKind::cfcw ? receive_frequency : slots[k].f_primary;
    }

    std::size_t pair_count() const {
        // Distinct (f1, f2) pairs in round-robin order; the schedule builder
        // only produces periodic plans so the first recurrence defines it.
        if (slots.size() < 2) return slots.empty() ? 0 : 1;
        for (std::size_t p = 1; p < slots.size(); ++p)
            if (slots[p].f_primary == slots[0].f_primary &&
                slots[p].f_secondary == slots[0].f_secondary)
                return p;
        return slots.size();
    }

    double max_primary() const {
        double m = 0.0;
        for (const auto& s : slots) m = std::max(m, s.f_primary);
        return m;
    }

    void validate(double capture_rate = 16000.0, bool require_hopping = false) const {
        if (slots.empty()) throw Error("invalid-configuration", "schedule has no slots");
        if (!(hop_period > 0)) throw Error("invalid-configuration", "hop_period must be positive");
        if (kind == ScheduleKind::cfcw) {
            if (!(receive_frequency > 0) || receive_frequency >= capture_rate / 2)
                throw Error("invalid-configuration",
                            "receive_frequency must lie below the capture Nyquist");
            for (const auto& s : slots) {
                if (std::abs((s.f_primary - s.f_secondary) - receive_frequency) > 1e-9)
                    throw Error("invalid-configuration",
                                "slot difference frequency != receive_frequency");
                if (s.f_primary < 25000.0)
                    throw Error("invalid-configuration",
                                "f_primary below the 25 kHz nonlinearity regime");
            }
        } else {
            for (const auto& s : slots)
                if (!(s.f_primary > 0) || s.f_primary >= capture_rate / 2 || s.f_secondary != 0.0)
                    throw Error("invalid-configuration", "bad direct-mode slot");
        }
        if (require_hopping)
            for (std::size_t k = 1; k < slots.size(); ++k)
                if (slots[k].f_primary == slots[k - 1].f_primary)
                    throw Error("invalid-configuration", "consecutive slots do not hop");
    }
};

// Two-slot round robin: (base, base - f_rcv), (base + step, base + step - f_rcv), ...
inline ToneSchedule build_hop_schedule(double f_rcv, double base_primary, double hop_step,
                                       double hop_period, double duration,
                                       double capture_rate = 16000.0) {
    if (!(f_rcv > 0) || !(hop_step > 0) || !(hop_period > 0) || !(duration > 0))
        throw Error("invalid-configuration", "schedule parameters must be positive");
    ToneSchedule sched;
    sched.kind = ScheduleKind::cfcw;
    sched.hop_period = hop_period;
    sched.receive_frequency = f_rcv;
    std::size_t n = static_cast<std::size_t>(std::ceil(duration / hop_period - 1e-9));
    for (std::size_t k = 0; k < n; ++k) {
        double f1 = base_primary + (k % 2 == 1 ? hop_step : 0.0);
        sched.slots.push_back({f1, f1 - f_rcv});
    }
    sched.validate(capture_rate, n >= 2);
    return sched;
}

// Constant (non-hopping) schedule, used as the baseline arm of the
// hop-vs-no-hop multipath comparison. Skips the hopping invariant by design.
inline ToneSchedule build_constant_schedule(double f_rcv, double base_primary, double hop_period,
                                            double duration, double capture_rate = 16000.0) {
    ToneSchedule sched;
    sched.kind = ScheduleKind::cfcw;
    sched.hop_period = hop_period;
    sched.receive_frequency = f_rcv;
    std::size_t n = static_cast<std::size_t>(std::ceil(duration / hop_period - 1e-9));
    for (std::size_t k = 0; k < n; ++k) sched.slots.push_back({base_primary, base_primary - f_rcv});
    sched.validate(capture_rate, false);
    return sched;
}

// Direct single-tone plan for primaries below the nonlinearity threshold
// (the 20 kHz arm of the frequency sweep). Tracked without down-conversion at
// a wide-band capture rate. hop_step * hop_period must be an integer cycle
// count so the per-pair phase reference stays constant across hops.
inline ToneSchedule build_direct_schedule(double base_primary, double hop_step, double hop_period,
                                          double duration, double capture_rate = 48000.0) {
    if (!(base_primary > 0) || !(hop_period > 0) || !(duration > 0))
        throw Error("invalid-configuration", "schedule parameters must be positive");
    double cycles = hop_step * hop_period;
    if (std::abs(cycles - std::round(cycles)) > 1e-9)
        throw Error("invalid-configuration", "direct mode requires integer hop_step*hop_period");
    ToneSchedule sched;
    sched.kind = ScheduleKind::direct;
    sched.hop_period = hop_period;
    sched.receive_frequency = base_primary;
    std::size_t n = static_cast<std::size_t>(std::ceil(duration / hop_period - 1e-9));
    for (std::size_t k = 0; k < n; ++k)
        sched.slots.push_back({base_primary + (k % 2 == 1 ? hop_step : 0.0), 0.0});
    sched.validate(capture_rate, false);
    return sched;
}

struct TransmitWaveforms {
    std::vector<double> primary_samples;
    std::vector<double> secondary_samples;
    double sample_rate = 0.0;
    bool phase_continuous = true;
    double primary_amplitude = 1.0;
    double secondary_amplitude = 0.2;
};

// Unit-amplitude sinusoids whose instantaneous frequency follows the
// schedule; the phase accumulator carries across hop boundaries so there are
// no discontinuity clicks.
inline TransmitWaveforms synthesize_transmit(const ToneSchedule& schedule, double sample_rate,
                                             double primary_amplitude = 1.0,
                                             double secondary_amplitude = 0.2) {
    if (!(sample_rate >= 2.0 * schedule.max_primary()))
        throw Error("invalid-configuration", "sample_rate below transmit Nyquist");
    TransmitWaveforms tx;
    tx.sample_rate = sample_rate;
    tx.primary_amplitude = primary_amplitude;
    tx.secondary_amplitude = secondary_amplitude;
    std::size_t n = static_cast<std::size_t>(std::llround(schedule.duration() * sample_rate));
    tx.primary_samples.resize(n);
    tx.secondary_samples.resize(n);
    double ramp = schedule.hop_ramp;
    if (ramp < 0.0 || ramp >= schedule.hop_period)
        throw Error("invalid-configuration", "hop_ramp must lie in [0, hop_period)");
    // Phase advance dt into a slot that glides from f_prev to f along a
    // raised-cosine profile over the first `ramp` seconds, then holds f.
    auto slot_phase = [ramp](double f_prev, double f, double dt) {
        if (ramp <= 0.0 || f_prev == f || dt <= 0.0) return kTwoPi * f * dt;
        if (dt >= ramp)
            return kTwoPi * (0.5 * (f_prev + f) * ramp + f * (dt - ramp));
        double u = dt / ramp;
        double s_int = 0.5 * u * u + (std::cos(kTwoPi * u) - 1.0) / (4.0 * kPi * kPi);
        return kTwoPi * (f_prev * dt + (f - f_prev) * ramp * s_int);
    };
    double ph1 = 0.0, ph2 = 0.0;  // phase at the start of the current slot
    double t_slot = 0.0;
    std::size_t slot = 0;
    double prev1 = schedule.slots[0].f_primary, prev2 = schedule.slots[0].f_secondary;
    for (std::size_t i = 0; i < n; ++i) {
        double t = static_cast<double>(i) / sample_rate;
        while (slot + 1 < schedule.slots.size() && t >= t_slot + schedule.hop_period - 1e-12) {
            ph1 += slot_phase(prev1, schedule.slots[slot].f_primary, schedule.hop_period);
            ph2 += slot_phase(prev2, schedule.slots[slot].f_secondary, schedule.hop_period);
            prev1 = schedule.slots[slot].f_primary;
            prev2 = schedule.slots[slot].f_secondary;
            t_slot += schedule.hop_period;
            ++slot;
        }
        double dt = t - t_slot;
        tx.primary_samples[i] =
            primary_amplitude * std::sin(ph1 + slot_phase(prev1, schedule.slots[slot].f_primary, dt));
        tx.secondary_samples[i] =
            secondary_amplitude *
            std::sin(ph2 + slot_phase(prev2, schedule.slots[slot].f_secondary, dt));
    }
    return tx;
}

}  // namespace cfcw
