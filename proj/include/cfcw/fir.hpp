// fir.hpp - Kaiser-window FIR design, fractional-delay interpolation, DC blocking
//
// Internal DSP utilities shared between the simulator and the capture model.

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "cfcw/signal_core.hpp"

namespace cfcw::dsp {

// Zeroth-order modified Bessel function, series expansion.
inline double bessel_i0(double x) {
    double sum = 1.0, term = 1.0;
    double half = x * 0.5;
    for (int k = 1; k < 64; ++k) {
        term *= (half / k) * (half / k);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

inline double kaiser_beta(double atten_db) {
    if (atten_db > 50.0) return 0.1102 * (atten_db - 8.7);
    if (atten_db >= 21.0) return 0.5842 * std::pow(atten_db - 21.0, 0.4) + 0.07886 * (atten_db - 21.0);
    return 0.0;
}

// Linear-phase low-pass, odd length so the group delay is an integer sample
// count that the capture path subtracts exactly.
struct LowpassSpec {
    double sample_rate;
    double pass_hz;
    double stop_hz;
    double atten_db = 70.0;
};

inline std::vector<double> design_lowpass(const LowpassSpec& s) {
    if (!(s.sample_rate > 0) || !(s.pass_hz > 0) || !(s.stop_hz > s.pass_hz) ||
        s.stop_hz >= s.sample_rate / 2)
        throw Error("invalid-configuration", "bad lowpass spec");
    double d_omega = kTwoPi * (s.stop_hz - s.pass_hz) / s.sample_rate;
    std::size_t n = static_cast<std::size_t>(std::ceil((s.atten_db - 8.0) / (2.285 * d_omega)));
    if (n % 2 == 1) ++n;  // even order -> odd length
    std::size_t len = n + 1;
    double beta = kaiser_beta(s.atten_db);
    double fc = 0.5 * (s.pass_hz + s.stop_hz) / s.sample_rate;  // cycles/sample
    double mid = 0.5 * static_cast<double>(n);
    double i0b = bessel_i0(beta);

    std::vector<double> h(len);
    double gain = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        double t = static_cast<double>(i) - mid;
        double sinc = (t == 0.0) ? 2.0 * fc : std::sin(kTwoPi * fc * t) / (kPi * t);
        double r = t / mid;
        double w = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
        h[i] = sinc * w;
        gain += h[i];
    }
    for (double& c : h) c /= gain;  // unit DC gain
    return h;
}

// Filter then decimate, evaluating only the retained output phases. The
// filter's constant group delay (len-1)/2 input samples is subtracted here,
// so output sample m sits at input time m*factor/rate exactly.
inline std::vector<double> filter_decimate(const std::vector<double>& x,
                                           const std::vector<double>& h, std::size_t factor) {
    const std::ptrdiff_t gd = static_cast<std::ptrdiff_t>(h.size() - 1) / 2;
    const std::ptrdiff_t n_in = static_cast<std::ptrdiff_t>(x.size());
    std::vector<double> y(x.size() / factor, 0.0);
    for (std::size_t m = 0; m < y.size(); ++m) {
        // y[m] = sum_k h[k] * x[m*factor + gd - k]
        const std::ptrdiff_t center = static_cast<std::ptrdiff_t>(m * factor) + gd;
        double acc = 0.0;
        const std::ptrdiff_t k0 = std::max<std::ptrdiff_t>(0, center - n_in + 1);
        const std::ptrdiff_t k1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(h.size()) - 1, center);
        const double* xp = x.data() + center;
        const double* hp = h.data();
        for (std::ptrdiff_t k = k0; k <= k1; ++k) acc += hp[k] * xp[-k];
        y[m] = acc;
    }
    return y;
}

// One-pole DC blocker, y[n] = x[n] - x[n-1] + r*y[n-1]. Near-unity gain and a
// constant (frame-independent) phase at the 7 kHz tracking line. State is
// primed on a leading slice of the input so the start-up step response does
// not bias the earliest frames.
inline void dc_block(std::vector<double>& x, double r = 0.995) {
    if (x.empty()) return;
    std::size_t prime = std::min<std::size_t>(x.size(), 2048);
    double xp = x[0], yp = 0.0;
    for (std::size_t i = 0; i < prime; ++i) {
        yp = x[i] - xp + r * yp;
        xp = x[i];
    }
    xp = x[0];
    for (std::size_t i = 0; i < x.size(); ++i) {
        double y = x[i] - xp + r * yp;
        xp = x[i];
        yp = y;
        x[i] = y;
    }
}

// Windowed-sinc fractional-delay reader over a sampled waveform. Samples
// outside the waveform read as zero (signal not yet arrived / ended).
// Kaiser-windowed sinc fractional-delay reader. The kernel is tabulated over
// the fractional offset (8192 rows), which quantizes the delay to 1/8192
// sample -- two orders of magnitude below the ranging resolution -- and keeps
// the per-sample cost at 2*half_taps multiply-adds.
class SincInterpolator {
public:
    explicit SincInterpolator(int half_taps = 8, double beta = 8.0) : half_(half_taps) {
        const double i0b = bessel_i0(beta);
        table_.resize(static_cast<std::size_t>(kRows) * 2 * half_);
        for (int r = 0; r < kRows; ++r) {
            double frac = static_cast<double>(r) / kRows;
            for (std::ptrdiff_t m = -half_; m < half_; ++m) {
                double t = frac + static_cast<double>(m);
                double u = t / static_cast<double>(half_);
                double w = (u > -1.0 && u < 1.0)
                               ? bessel_i0(beta * std::sqrt(1.0 - u * u)) / i0b
                               : 0.0;
                double sinc = (t == 0.0) ? 1.0 : std::sin(kPi * t) / (kPi * t);
                table_[static_cast<std::size_t>(r) * 2 * half_ +
                       static_cast<std::size_t>(m + half_)] = sinc * w;
            }
        }
    }

    double operator()(const std::vector<double>& x, double pos) const {
        const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
        const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(std::floor(pos));
        const double frac = pos - static_cast<double>(base);
        if (base + half_ < 0 || base - half_ + 1 >= n) return 0.0;
        int row = static_cast<int>(frac * kRows + 0.5);
        std::ptrdiff_t shift = 0;
        if (row >= kRows) {  // rounded up to the next integer sample
            row = 0;
            shift = 1;
        }
        const double* k = &table_[static_cast<std::size_t>(row) * 2 * half_];
        double acc = 0.0;
        std::ptrdiff_t first = base + shift - half_ + 1, last = base + shift + half_;
        if (first >= 0 && last < n) {
            const double* xp = &x[first];
            for (std::ptrdiff_t m = 0; m < 2 * half_; ++m) acc += xp[m] * k[2 * half_ - 1 - m];
        } else {
            for (std::ptrdiff_t m = 0; m < 2 * half_; ++m) {
                std::ptrdiff_t idx = first + m;
                if (idx >= 0 && idx < n) acc += x[idx] * k[2 * half_ - 1 - m];
            }
        }
        return acc;
    }

private:
    static constexpr int kRows = 8192;
    std::ptrdiff_t half_;
    std::vector<double> table_;
};

}  // namespace cfcw::dsp
