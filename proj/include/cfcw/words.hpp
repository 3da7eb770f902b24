// words.hpp - synthetic pen-motion generator
//
// Produces beacon motion paths that look like handwriting: per-word stroke
// templates, smooth speed profiles with real stops at stroke boundaries,
// pen-lift arcs between strokes, and several writing-surface poses. Every
// sample carries a ground-truth label so recovery quality can be scored.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cfcw/acoustic_sim.hpp"
#include "cfcw/signal_core.hpp"

namespace cfcw {

enum class SampleLabel : std::uint8_t { stroke, lift, stop };

enum class PlanePose : std::uint8_t {
    flat_above,      // horizontal plane 25 cm above the array
    flat_beside,     // horizontal plane on the table next to the array
    slant_beside,    // plane tilted 45 degrees, off to the side
    upright_beside,  // vertical plane facing the array
    cylinder_beside  // writing wrapped around a 6 cm-radius cylinder
};

struct SyntheticWordSpec {
    std::string word = "fit";
    double width = 0.08;         // m, word bounding width (3..20 cm)
    PlanePose pose = PlanePose::flat_above;
    double max_speed = 0.5;      // m/s peak pen speed
    double lift_height = 0.02;   // m, apex of pen-lift arcs
    double stop_dwell = 0.05;    // s, dwell at each stroke boundary
    double frame_rate = 1000.0 / 3.0;  // samples per second

    void validate() const {
        if (width < 0.03 || width > 0.20)
            throw Error("invalid-configuration", "word width must be 3..20 cm");
        if (max_speed <= 0.0 || frame_rate <= 0.0)
            throw Error("invalid-configuration", "speed and frame rate must be positive");
    }
};

struct WordTruth {
    MotionPath path;
    std::vector<SampleLabel> labels;                        // one per path sample
    std::vector<std::pair<std::size_t, std::size_t>> strokes;  // sample spans
    Vec3 surface_origin;
    Vec3 surface_normal;  // at the word centre (cylinder: mean normal)
    std::size_t lift_count = 0;
    std::size_t stop_count = 0;  // dwell intervals

    double label_fraction(SampleLabel l) const {
        std::size_t n = 0;
        for (auto v : labels) n += (v == l);
        return labels.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(labels.size());
    }
};

using StrokeTemplate = std::vector<std::vector<std::array<double, 2>>>;

// Unit-box stroke templates (x in [0,1], y in [0,0.5]); not typographic, but
// each word has a distinct stroke count and plenty of curvature.
inline const std::map<std::string, StrokeTemplate>& word_templates() {
    static const std::map<std::string, StrokeTemplate> t = {
        {"fit",
         {{{0.10, 0.45}, {0.06, 0.48}, {0.02, 0.44}, {0.04, 0.25}, {0.00, 0.28},
           {0.12, 0.28}, {0.05, 0.25}, {0.05, 0.00}},
          {{0.16, 0.30}, {0.17, 0.12}, {0.20, 0.00}, {0.25, 0.04}},
          {{0.27, 0.30}, {0.45, 0.30}, {0.33, 0.32}, {0.32, 0.45}, {0.33, 0.20},
           {0.35, 0.02}, {0.42, 0.00}, {0.46, 0.06}}}},
        {"line",
         {{{0.02, 0.48}, {0.03, 0.20}, {0.04, 0.00}},
          {{0.10, 0.30}, {0.11, 0.10}, {0.12, 0.00}},
          {{0.18, 0.00}, {0.19, 0.28}, {0.24, 0.26}, {0.28, 0.12}, {0.29, 0.00}},
          {{0.35, 0.14}, {0.45, 0.16}, {0.44, 0.26}, {0.36, 0.24}, {0.34, 0.08},
           {0.40, 0.00}, {0.47, 0.02}}}},
        {"wave",
         {{{0.00, 0.28}, {0.05, 0.00}, {0.10, 0.22}, {0.15, 0.00}, {0.20, 0.28}},
          {{0.25, 0.20}, {0.32, 0.26}, {0.34, 0.10}, {0.28, 0.00}, {0.24, 0.08}},
          {{0.40, 0.26}, {0.44, 0.00}, {0.50, 0.24}},
          {{0.55, 0.14}, {0.65, 0.16}, {0.64, 0.26}, {0.56, 0.24}, {0.54, 0.06},
           {0.62, 0.00}}}},
        {"star",
         {{{0.00, 0.24}, {0.06, 0.28}, {0.04, 0.14}, {0.10, 0.02}, {0.02, 0.00}},
          {{0.14, 0.30}, {0.15, 0.08}, {0.17, 0.00}, {0.21, 0.03}},
          {{0.12, 0.24}, {0.24, 0.24}},
          {{0.28, 0.18}, {0.36, 0.26}, {0.40, 0.10}, {0.34, 0.00}, {0.27, 0.06}},
          {{0.46, 0.28}, {0.44, 0.10}, {0.48, 0.00}, {0.56, 0.04}, {0.58, 0.18}}}},
        {"loop",
         {{{0.02, 0.48}, {0.03, 0.18}, {0.04, 0.00}},
          {{0.10, 0.20}, {0.18, 0.24}, {0.20, 0.08}, {0.12, 0.00}, {0.08, 0.10},
           {0.14, 0.18}},
          {{0.26, 0.20}, {0.34, 0.24}, {0.36, 0.08}, {0.28, 0.00}, {0.24, 0.10}},
          {{0.42, 0.24}, {0.43, 0.02}, {0.44, -0.14}, {0.50, -0.10}, {0.52, 0.06},
           {0.44, 0.16}}}},
        {"home",
         {{{0.00, 0.48}, {0.01, 0.20}, {0.02, 0.00}, {0.03, 0.22}, {0.09, 0.24},
           {0.10, 0.00}},
          {{0.16, 0.14}, {0.24, 0.18}, {0.26, 0.04}, {0.18, 0.00}, {0.14, 0.08}},
          {{0.32, 0.00}, {0.33, 0.22}, {0.38, 0.18}, {0.39, 0.00}, {0.40, 0.22},
           {0.45, 0.18}, {0.46, 0.00}},
          {{0.52, 0.12}, {0.62, 0.14}, {0.61, 0.24}, {0.53, 0.22}, {0.51, 0.06},
           {0.58, 0.00}}}},
        {"sign",
         {{{0.10, 0.24}, {0.02, 0.26}, {0.00, 0.14}, {0.09, 0.10}, {0.08, 0.00},
           {0.00, 0.02}},
          {{0.15, 0.30}, {0.16, 0.10}, {0.17, 0.00}},
          {{0.28, 0.22}, {0.22, 0.24}, {0.21, 0.04}, {0.28, 0.00}, {0.29, -0.12},
           {0.22, -0.10}},
          {{0.34, 0.00}, {0.35, 0.22}, {0.41, 0.20}, {0.43, 0.08}, {0.44, 0.00}}}},
        {"okay",
         {{{0.06, 0.26}, {0.00, 0.18}, {0.03, 0.02}, {0.11, 0.04}, {0.12, 0.18},
           {0.06, 0.26}},
          {{0.18, 0.48}, {0.19, 0.18}, {0.20, 0.00}},
          {{0.30, 0.24}, {0.21, 0.10}, {0.31, 0.00}},
          {{0.36, 0.22}, {0.44, 0.24}, {0.45, 0.04}, {0.38, 0.00}, {0.35, 0.10}},
          {{0.50, 0.22}, {0.53, 0.02}, {0.56, -0.12}, {0.49, -0.10}}}},
        {"word",
         {{{0.00, 0.26}, {0.04, 0.00}, {0.08, 0.20}, {0.12, 0.00}, {0.16, 0.26}},
          {{0.24, 0.24}, {0.19, 0.14}, {0.24, 0.00}, {0.30, 0.12}, {0.24, 0.24}},
          {{0.34, 0.00}, {0.35, 0.20}, {0.40, 0.24}, {0.43, 0.18}},
          {{0.52, 0.20}, {0.46, 0.22}, {0.45, 0.04}, {0.52, 0.00}, {0.54, 0.24},
           {0.55, 0.48}}}},
        {"alexa",
         {{{0.06, 0.22}, {0.00, 0.16}, {0.03, 0.02}, {0.09, 0.06}, {0.10, 0.20},
           {0.11, 0.00}},
          {{0.16, 0.48}, {0.17, 0.18}, {0.18, 0.00}},
          {{0.24, 0.12}, {0.32, 0.16}, {0.31, 0.24}, {0.24, 0.22}, {0.22, 0.06},
           {0.30, 0.00}},
          {{0.36, 0.24}, {0.46, 0.00}},
          {{0.36, 0.00}, {0.46, 0.24}},
          {{0.56, 0.22}, {0.50, 0.16}, {0.52, 0.02}, {0.59, 0.06}, {0.60, 0.20},
           {0.61, 0.00}}}},
    };
    return t;
}

namespace detail {

struct TimelinePiece {
    std::vector<Vec3> waypoints;  // 3D, already posed
    SampleLabel label;
    double duration = 0.0;        // seconds
    double length = 0.0;
    int stroke_id = -1;           // >= 0 for stroke pieces
};

inline double polyline_length(const std::vector<Vec3>& w) {
    double l = 0.0;
    for (std::size_t i = 1; i < w.size(); ++i) l += distance(w[i - 1], w[i]);
    return l;
}

inline Vec3 polyline_at(const std::vector<Vec3>& w, double s) {
    for (std::size_t i = 1; i < w.size(); ++i) {
        double seg = distance(w[i - 1], w[i]);
        if (s <= seg || i + 1 == w.size()) {
            double u = seg > 0 ? std::clamp(s / seg, 0.0, 1.0) : 0.0;
            return w[i - 1] + (w[i] - w[i - 1]) * u;
        }
        s -= seg;
    }
    return w.back();
}

}  // namespace detail

// Maps 2D template coordinates (meters, word-local) plus an off-surface
// height to a 3D point for the requested pose.
inline Vec3 pose_point(PlanePose pose, double u, double v, double h, double width) {
    double cu = u - width / 2.0;
    switch (pose) {
        case PlanePose::flat_above:
            return {cu, v - 0.02, 0.25 + h};
        case PlanePose::flat_beside:
            return {cu, 0.20 + v, 0.02 + h};
        case PlanePose::slant_beside: {
            double c = std::cos(kPi / 4.0), s = std::sin(kPi / 4.0);
            return {cu, 0.20 + v * c - h * s, 0.10 + v * s + h * c};
        }
        case PlanePose::upright_beside:
            return {cu, 0.25 - h, 0.08 + v};
        case PlanePose::cylinder_beside: {
            const double r = 0.06;
            double ang = v / r;
            // h extends along the local outward normal of the cylinder
            return {cu, 0.22 - (r + h) * std::sin(ang), 0.10 + r - (r + h) * std::cos(ang)};
        }
    }
    return {};
}

inline Vec3 pose_normal(PlanePose pose) {
    switch (pose) {
        case PlanePose::flat_above:
        case PlanePose::flat_beside:
            return {0, 0, 1};
        case PlanePose::slant_beside: {
            double c = std::cos(kPi / 4.0), s = std::sin(kPi / 4.0);
            return {0, -s, c};
        }
        case PlanePose::upright_beside:
            return {0, -1, 0};
        case PlanePose::cylinder_beside:
            return {0, 0, -1};  // outward normal at the word centre
    }
    return {0, 0, 1};
}

// Generates the labelled motion path for one word. Each stroke is traversed
// with a smoothstep arc-length profile (zero speed at both ends, peak at
// max_speed); stroke boundaries dwell for stop_dwell; lifts follow an arc
// whose apex is lift_height off the surface.
inline WordTruth generate_word(const SyntheticWordSpec& spec) {
    spec.validate();
    auto it = word_templates().find(spec.word);
    if (it == word_templates().end())
        throw Error("invalid-configuration", "unknown word template: " + spec.word);
    const StrokeTemplate& tmpl = it->second;

    // Template bounding box -> requested width.
    double xmin = 1e30, xmax = -1e30;
    for (const auto& st : tmpl)
        for (const auto& p : st) {
            xmin = std::min(xmin, p[0]);
            xmax = std::max(xmax, p[0]);
        }
    double scale = spec.width / (xmax - xmin);

    auto posed = [&](double x, double y, double h) {
        return pose_point(spec.pose, (x - xmin) * scale, y * scale, h, spec.width);
    };

    std::vector<detail::TimelinePiece> pieces;
    auto add_dwell = [&](const Vec3& p) {
        detail::TimelinePiece d;
        d.waypoints = {p, p};
        d.label = SampleLabel::stop;
        d.duration = spec.stop_dwell;
        pieces.push_back(d);
    };
    for (std::size_t s = 0; s < tmpl.size(); ++s) {
        detail::TimelinePiece stroke;
        for (const auto& p : tmpl[s]) stroke.waypoints.push_back(posed(p[0], p[1], 0.0));
        stroke.label = SampleLabel::stroke;
        stroke.length = detail::polyline_length(stroke.waypoints);
        stroke.duration = 1.5 * stroke.length / spec.max_speed;
        stroke.stroke_id = static_cast<int>(s);

        add_dwell(stroke.waypoints.front());
        pieces.push_back(stroke);
        add_dwell(stroke.waypoints.back());

        if (s + 1 < tmpl.size()) {
            detail::TimelinePiece lift;
            const auto& a = tmpl[s].back();
            const auto& b = tmpl[s + 1].front();
            const int kArc = 16;
            for (int i = 0; i <= kArc; ++i) {
                double u = static_cast<double>(i) / kArc;
                double x = a[0] + (b[0] - a[0]) * u;
                double y = a[1] + (b[1] - a[1]) * u;
                lift.waypoints.push_back(posed(x, y, spec.lift_height * 4.0 * u * (1.0 - u)));
            }
            lift.label = SampleLabel::lift;
            lift.length = detail::polyline_length(lift.waypoints);
            lift.duration = 1.5 * std::max(lift.length, 0.01) / spec.max_speed;
            pieces.push_back(lift);
        }
    }

    WordTruth out;
    out.surface_origin = posed(xmin, 0.0, 0.0);
    out.surface_normal = pose_normal(spec.pose);
    out.lift_count = tmpl.size() - 1;

    double t = 0.0;
    const double dt = 1.0 / spec.frame_rate;
    double next_sample = 0.0;
    std::size_t sample_index = 0;
    int current_stroke = -1;
    std::size_t stroke_begin = 0;
    for (const auto& piece : pieces) {
        if (piece.label == SampleLabel::stop) ++out.stop_count;
        double t_end = t + piece.duration;
        while (next_sample < t_end) {
            double u = piece.duration > 0 ? (next_sample - t) / piece.duration : 0.0;
            double sm = u * u * (3.0 - 2.0 * u);  // zero end speeds
            Vec3 p = detail::polyline_at(piece.waypoints, sm * piece.length);
            out.path.timestamps.push_back(next_sample);
            out.path.positions.push_back(p);
            out.labels.push_back(piece.label);
            if (piece.label == SampleLabel::stroke) {
                if (piece.stroke_id != current_stroke) {
                    if (current_stroke >= 0)
                        out.strokes.push_back({stroke_begin, sample_index});
                    current_stroke = piece.stroke_id;
                    stroke_begin = sample_index;
                }
            } else if (current_stroke >= 0) {
                out.strokes.push_back({stroke_begin, sample_index});
                current_stroke = -1;
            }
            ++sample_index;
            next_sample += dt;
        }
        t = t_end;
    }
    if (current_stroke >= 0) out.strokes.push_back({stroke_begin, sample_index});
    if (out.path.positions.size() < 4)
        throw Error("invalid-configuration", "word motion too short to sample");
    return out;
}

// -------- plain motion paths for ranging / tracking experiments --------

// Straight run with zero end speeds; peak speed = 1.5 * distance / duration.
inline MotionPath make_line_path(const Vec3& start, const Vec3& end, double duration,
                                 double frame_rate = 1000.0) {
    MotionPath p;
    std::size_t n = static_cast<std::size_t>(duration * frame_rate) + 1;
    for (std::size_t i = 0; i < n; ++i) {
        double u = static_cast<double>(i) / static_cast<double>(n - 1);
        double sm = u * u * (3.0 - 2.0 * u);
        p.timestamps.push_back(u * duration);
        p.positions.push_back(start + (end - start) * sm);
    }
    return p;
}

// Straight run whose speed ramps smoothly up to peak_speed and back down:
// v(t) = peak * sin^2(pi t / T). Used to probe unwrap speed limits.
inline MotionPath make_speed_ramp_path(const Vec3& start, const Vec3& direction,
                                       double peak_speed, double duration,
                                       double frame_rate = 1000.0) {
    Vec3 dir = direction.normalized();
    MotionPath p;
    std::size_t n = static_cast<std::size_t>(duration * frame_rate) + 1;
    for (std::size_t i = 0; i < n; ++i) {
        double t = duration * static_cast<double>(i) / static_cast<double>(n - 1);
        double s = peak_speed * (t / 2.0 - duration / (4.0 * kPi) * std::sin(kTwoPi * t / duration));
        p.timestamps.push_back(t);
        p.positions.push_back(start + dir * s);
    }
    return p;
}

// Closed five-point star, one smoothstep pass per edge.
inline MotionPath make_star_path(const Vec3& center, double radius, double edge_duration,
                                 double frame_rate = 1000.0) {
    std::vector<Vec3> verts;
    for (int i = 0; i < 5; ++i) {
        double ang = kTwoPi * static_cast<double>((i * 2) % 5) / 5.0 + kPi / 2.0;
        verts.push_back(center + Vec3{radius * std::cos(ang), radius * std::sin(ang), 0.0});
    }
    verts.push_back(verts.front());
    MotionPath p;
    double t0 = 0.0;
    std::size_t per_edge = static_cast<std::size_t>(edge_duration * frame_rate);
    for (std::size_t e = 0; e + 1 < verts.size(); ++e) {
        for (std::size_t i = 0; i < per_edge; ++i) {
            double u = static_cast<double>(i) / static_cast<double>(per_edge);
            double sm = u * u * (3.0 - 2.0 * u);
            p.timestamps.push_back(t0 + u * edge_duration);
            p.positions.push_back(verts[e] + (verts[e + 1] - verts[e]) * sm);
        }
        t0 += edge_duration;
    }
    p.timestamps.push_back(t0);
    p.positions.push_back(verts.back());
    return p;
}

}  // namespace cfcw
