// coexistence.hpp - band occupancy of the capture stream
//
// The tracking line sits at 7 kHz, far above voice content, so a capture can
// carry speech and ranging simultaneously. This module quantifies that:
// Welch-averaged band powers, the change in voice-band level when the
// ranging tones are active, and how much tone energy leaks into voice bands.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cfcw/acoustic_sim.hpp"
#include "cfcw/fft.hpp"
#include "cfcw/signal_core.hpp"

namespace cfcw {

struct Band {
    std::string name;
    double low_hz = 0.0;
    double high_hz = 0.0;
};

struct BandEnergy {
    Band band;
    double power = 0.0;  // mean squared amplitude within the band
    double level_db = 0.0;
};

struct BandReport {
    std::vector<BandEnergy> bands;
    double tracking_line_hz = 7000.0;
    double tracking_line_db = 0.0;   // strongest bin within +-250 Hz of the line
    double voice_delta_db = 0.0;     // voice-band change vs. reference (0 if none)
    double leakage_db = 0.0;         // tracking energy outside 7+-1 kHz re inside
    bool has_reference = false;

    const BandEnergy* find(const std::string& name) const {
        for (const auto& b : bands)
            if (b.band.name == name) return &b;
        return nullptr;
    }
};

inline std::vector<Band> default_bands(double sample_rate) {
    std::vector<Band> bands{{"voice", 0.0, 4000.0}, {"tracking", 6000.0, 8000.0}};
    bands.push_back({"full", 0.0, sample_rate / 2.0});
    return bands;
}

namespace detail {

inline double band_power(const WelchSpectrum& s, double lo, double hi) {
    double acc = 0.0;
    for (std::size_t k = 0; k < s.power.size(); ++k) {
        double f = static_cast<double>(k) * s.bin_width_hz;
        if (f >= lo && f <= hi) acc += s.power[k];
    }
    return acc;
}

inline double to_db(double p) { return 10.0 * std::log10(std::max(p, 1e-30)); }

}  // namespace detail

namespace detail {

// Welch PSD of the steady-state portion of a channel: the first 100 ms are
// skipped (when the capture affords it) so the power-on transient of the
// capture chain's DC-removal filter is not counted as band occupancy.
inline WelchSpectrum steady_psd(const RawCapture& cap, std::size_t channel,
                                std::size_t nfft) {
    const auto& x = cap.channels[channel];
    std::size_t skip = static_cast<std::size_t>(0.1 * cap.sample_rate);
    if (x.size() < skip + 4 * nfft) skip = 0;
    std::vector<double> tail(x.begin() + static_cast<std::ptrdiff_t>(skip), x.end());
    return welch_psd(tail, cap.sample_rate, nfft);
}

}  // namespace detail

// Welch analysis of one capture channel. `reference` is the same channel
// recorded with the ranging tones off; when present the voice-band delta and
// the leakage ratio use it to isolate the tracking signal's own contribution.
// Window: 32 ms rounded down to a power of two.
inline BandReport band_energy_report(const RawCapture& cap, std::size_t channel,
                                     const RawCapture* reference = nullptr,
                                     double tracking_line_hz = 7000.0) {
    if (channel >= cap.channels.size())
        throw Error("invalid-argument", "channel index out of range");
    std::size_t nfft = 1;
    while (nfft * 2 <= static_cast<std::size_t>(0.032 * cap.sample_rate)) nfft <<= 1;
    auto spec = detail::steady_psd(cap, channel, nfft);

    BandReport rep;
    rep.tracking_line_hz = tracking_line_hz;
    for (const auto& b : default_bands(cap.sample_rate)) {
        BandEnergy e;
        e.band = b;
        e.power = detail::band_power(spec, b.low_hz, b.high_hz);
        e.level_db = detail::to_db(e.power);
        rep.bands.push_back(e);
    }
    double line = 0.0;
    for (std::size_t k = 0; k < spec.power.size(); ++k) {
        double f = static_cast<double>(k) * spec.bin_width_hz;
        if (std::abs(f - tracking_line_hz) <= 250.0) line = std::max(line, spec.power[k]);
    }
    rep.tracking_line_db = detail::to_db(line);

    const double lo = tracking_line_hz - 1000.0, hi = tracking_line_hz + 1000.0;
    double inside = detail::band_power(spec, lo, hi);
    double outside = detail::band_power(spec, 0.0, cap.sample_rate / 2.0) - inside;
    if (reference) {
        if (channel >= reference->channels.size())
            throw Error("invalid-argument", "reference channel index out of range");
        auto ref = detail::steady_psd(*reference, channel, nfft);
        double ref_voice = detail::band_power(ref, 0.0, 4000.0);
        rep.voice_delta_db = detail::to_db(rep.find("voice")->power) -
                             detail::to_db(ref_voice);
        rep.has_reference = true;
        inside = std::max(inside - detail::band_power(ref, lo, hi), 0.0);
        outside = std::max(
            outside - (detail::band_power(ref, 0.0, cap.sample_rate / 2.0) -
                       detail::band_power(ref, lo, hi)),
            0.0);
    }
    rep.leakage_db = detail::to_db(outside) - detail::to_db(inside);
    return rep;
}

}  // namespace cfcw
