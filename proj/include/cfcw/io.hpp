// io.hpp - capture, CSV and SVG serialization
//
// WAV files are 32-bit float RIFF, interleaved multichannel. CSV output is
// written with fixed %.9g formatting so identical runs produce identical
// bytes. SVG export renders recovered ink in millimetre units.

#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "cfcw/acoustic_sim.hpp"
#include "cfcw/handwriting.hpp"
#include "cfcw/localize.hpp"
#include "cfcw/signal_core.hpp"

namespace cfcw {

namespace detail {

inline void put_u32(std::string& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u16(std::string& b, std::uint16_t v) {
    for (int i = 0; i < 2; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline std::uint32_t get_u32(const char* p) {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    return v;
}
inline std::uint16_t get_u16(const char* p) {
    std::uint16_t v;
    std::memcpy(&v, p, 2);
    return v;
}

inline std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace detail

inline void write_wav(const std::string& path, const RawCapture& cap) {
    if (cap.channels.empty()) throw Error("invalid-argument", "capture has no channels");
    const std::size_t frames = cap.channels[0].size();
    for (const auto& ch : cap.channels)
        if (ch.size() != frames)
            throw Error("invalid-argument", "channel lengths differ");
    const std::uint16_t nch = static_cast<std::uint16_t>(cap.channels.size());
    const std::uint32_t rate = static_cast<std::uint32_t>(cap.sample_rate + 0.5);
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(frames * nch * 4);

    std::string b;
    b.reserve(58 + data_bytes);
    b += "RIFF";
    detail::put_u32(b, 50 + data_bytes);
    b += "WAVEfmt ";
    detail::put_u32(b, 16);
    detail::put_u16(b, 3);  // IEEE float
    detail::put_u16(b, nch);
    detail::put_u32(b, rate);
    detail::put_u32(b, rate * nch * 4);
    detail::put_u16(b, static_cast<std::uint16_t>(nch * 4));
    detail::put_u16(b, 32);
    b += "fact";
    detail::put_u32(b, 4);
    detail::put_u32(b, static_cast<std::uint32_t>(frames));
    b += "data";
    detail::put_u32(b, data_bytes);
    for (std::size_t i = 0; i < frames; ++i)
        for (std::size_t c = 0; c < nch; ++c) {
            float f = static_cast<float>(cap.channels[c][i]);
            char raw[4];
            std::memcpy(raw, &f, 4);
            b.append(raw, 4);
        }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("invalid-argument", "cannot open for writing: " + path);
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
}

inline RawCapture read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("invalid-argument", "cannot open: " + path);
    std::string b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (b.size() < 44 || b.compare(0, 4, "RIFF") != 0 || b.compare(8, 4, "WAVE") != 0)
        throw Error("invalid-argument", "not a RIFF WAVE file: " + path);

    std::uint16_t format = 0, nch = 0, bits = 0;
    std::uint32_t rate = 0;
    std::size_t data_off = 0, data_len = 0;
    std::size_t pos = 12;
    while (pos + 8 <= b.size()) {
        std::string id = b.substr(pos, 4);
        std::uint32_t len = detail::get_u32(b.data() + pos + 4);
        if (id == "fmt " && len >= 16) {
            format = detail::get_u16(b.data() + pos + 8);
            nch = detail::get_u16(b.data() + pos + 10);
            rate = detail::get_u32(b.data() + pos + 12);
            bits = detail::get_u16(b.data() + pos + 22);
        } else if (id == "data") {
            data_off = pos + 8;
            data_len = std::min<std::size_t>(len, b.size() - data_off);
        }
        pos += 8 + len + (len & 1);
    }
    if (format != 3 || bits != 32 || nch == 0 || data_off == 0)
        throw Error("invalid-argument", "expected 32-bit float WAV: " + path);

    RawCapture cap;
    cap.sample_rate = rate;
    cap.channels.assign(nch, {});
    std::size_t frames = data_len / (nch * 4);
    for (auto& ch : cap.channels) ch.reserve(frames);
    for (std::size_t i = 0; i < frames; ++i)
        for (std::size_t c = 0; c < nch; ++c) {
            float f;
            std::memcpy(&f, b.data() + data_off + (i * nch + c) * 4, 4);
            cap.channels[c].push_back(f);
        }
    return cap;
}

// -------- CSV --------

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("invalid-argument", "cannot open for writing: " + path);
    for (std::size_t i = 0; i < header.size(); ++i)
        out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i)
            out << (i ? "," : "") << detail::fmt_num(r[i]);
        out << "\n";
    }
}

inline void write_trajectory_csv(const std::string& path, const Trajectory3D& traj) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < traj.points.size(); ++i)
        rows.push_back({traj.timestamps[i], traj.points[i].x, traj.points[i].y,
                        traj.points[i].z, traj.residuals[i],
                        traj.valid[i] ? 1.0 : 0.0});
    write_csv(path, {"time_s", "x_m", "y_m", "z_m", "residual_m", "valid"}, rows);
}

inline void write_phase_csv(const std::string& path, const std::vector<PhaseTrack>& tracks,
                            double frame_rate) {
    std::vector<std::string> header{"time_s"};
    for (std::size_t m = 0; m < tracks.size(); ++m) {
        header.push_back("phase_mic" + std::to_string(m));
        header.push_back("dist_mic" + std::to_string(m));
    }
    std::size_t n = tracks.empty() ? 0 : tracks[0].frames.size();
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<double> r{static_cast<double>(k) / frame_rate};
        for (const auto& t : tracks) {
            r.push_back(k < t.frames.size() ? t.frames[k].wrapped_phase : 0.0);
            r.push_back(k < t.distance.size() ? t.distance[k] : 0.0);
        }
        rows.push_back(std::move(r));
    }
    write_csv(path, header, rows);
}

// -------- SVG --------

// Ink in millimetres, y up. Each stroke becomes one polyline.
inline void write_ink_svg(const std::string& path, const Ink2D& ink) {
    const double mm = 1000.0;
    double x0 = ink.bounding_box[0] * mm, y0 = ink.bounding_box[1] * mm;
    double w = (ink.bounding_box[2] - ink.bounding_box[0]) * mm;
    double h = (ink.bounding_box[3] - ink.bounding_box[1]) * mm;
    double pad = 0.05 * std::max(w, h) + 2.0;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("invalid-argument", "cannot open for writing: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::fmt_num(w + 2 * pad)
        << "mm\" height=\"" << detail::fmt_num(h + 2 * pad) << "mm\" viewBox=\""
        << detail::fmt_num(x0 - pad) << " " << detail::fmt_num(-(y0 + h) - pad) << " "
        << detail::fmt_num(w + 2 * pad) << " " << detail::fmt_num(h + 2 * pad) << "\">\n";
    for (const auto& st : ink.strokes) {
        out << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"0.6\" "
               "stroke-linecap=\"round\" stroke-linejoin=\"round\" points=\"";
        for (const auto& p : st)
            out << detail::fmt_num(p[0] * mm) << "," << detail::fmt_num(-p[1] * mm) << " ";
        out << "\"/>\n";
    }
    out << "</svg>\n";
}

// Simple xy line plot, one polyline per series.
inline void write_plot_svg(const std::string& path,
                           const std::vector<std::pair<std::string, std::vector<std::array<double, 2>>>>& series,
                           const std::string& x_label, const std::string& y_label) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& [name, pts] : series)
        for (const auto& p : pts) {
            xmin = std::min(xmin, p[0]);
            xmax = std::max(xmax, p[0]);
            ymin = std::min(ymin, p[1]);
            ymax = std::max(ymax, p[1]);
        }
    if (!(xmax > xmin)) xmax = xmin + 1;
    if (!(ymax > ymin)) ymax = ymin + 1;
    const double W = 640, H = 400, m = 50;
    auto sx = [&](double x) { return m + (x - xmin) / (xmax - xmin) * (W - 2 * m); };
    auto sy = [&](double y) { return H - m - (y - ymin) / (ymax - ymin) * (H - 2 * m); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("invalid-argument", "cannot open for writing: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << m << "\" y1=\"" << H - m << "\" x2=\"" << W - m << "\" y2=\""
        << H - m << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m << "\" y2=\"" << H - m
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" font-size=\"12\">" << x_label
        << "</text>\n<text x=\"12\" y=\"" << m - 10 << "\" font-size=\"12\">" << y_label
        << "</text>\n";
    int ci = 0;
    for (const auto& [name, pts] : series) {
        const char* col = colors[ci % 5];
        out << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.2\" points=\"";
        for (const auto& p : pts) out << detail::fmt_num(sx(p[0])) << "," << detail::fmt_num(sy(p[1])) << " ";
        out << "\"/>\n";
        out << "<text x=\"" << W - m - 120 << "\" y=\"" << m + 16 * ci << "\" font-size=\"12\" fill=\""
            << col << "\">" << name << "</text>\n";
        ++ci;
    }
    out << "</svg>\n";
}

}  // namespace cfcw
