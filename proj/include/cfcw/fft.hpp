// fft.hpp - radix-2 complex FFT, enough for spectra and band power
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "cfcw/signal_core.hpp"

namespace cfcw {

inline void fft_inplace(std::vector<std::complex<double>>& x, bool inverse = false) {
    const std::size_t n = x.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw Error("invalid-argument", "fft length must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j |= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
        std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = x[i + k];
                std::complex<double> v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse)
        for (auto& v : x) v /= static_cast<double>(n);
}

inline std::vector<std::complex<double>> fft_real(const std::vector<double>& x) {
    std::size_t n = 1;
    while (n < x.size()) n <<= 1;
    std::vector<std::complex<double>> buf(n);
    for (std::size_t i = 0; i < x.size(); ++i) buf[i] = x[i];
    fft_inplace(buf);
    return buf;
}

// Welch power spectral density estimate: Hann windows, 50% overlap.
// Returns per-bin power (window-gain compensated) for bins [0, nfft/2].
struct WelchSpectrum {
    std::vector<double> power;  // mean squared amplitude per bin
    double bin_width_hz = 0.0;
    std::size_t segments = 0;
};

inline WelchSpectrum welch_psd(const std::vector<double>& x, double sample_rate,
                               std::size_t nfft) {
    if (nfft == 0 || (nfft & (nfft - 1)) != 0)
        throw Error("invalid-argument", "welch nfft must be a power of two");
    if (x.size() < nfft) throw Error("insufficient-data", "signal shorter than one window");
    std::vector<double> win(nfft);
    double wsum2 = 0.0;
    for (std::size_t i = 0; i < nfft; ++i) {
        win[i] = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(nfft));
        wsum2 += win[i] * win[i];
    }
    WelchSpectrum out;
    out.power.assign(nfft / 2 + 1, 0.0);
    out.bin_width_hz = sample_rate / static_cast<double>(nfft);
    std::vector<std::complex<double>> buf(nfft);
    for (std::size_t start = 0; start + nfft <= x.size(); start += nfft / 2) {
        for (std::size_t i = 0; i < nfft; ++i) buf[i] = x[start + i] * win[i];
        fft_inplace(buf);
        for (std::size_t k = 0; k <= nfft / 2; ++k)
            out.power[k] += std::norm(buf[k]) / wsum2;
        ++out.segments;
    }
    for (auto& p : out.power) p /= static_cast<double>(out.segments);
    return out;
}

}  // namespace cfcw
