// localize.hpp - absolute per-mic distances and per-frame multilateration
//
// The start fix anchors each microphone's relative distance-change track into
// an absolute range series; each frame is then solved as a small nonlinear
// least-squares problem sum_i (|P - m_i| - d_i)^2 by damped Gauss-Newton,
// warm-started from the previous frame. (The textbook form writes the
// summand as sqrt(|P - m_i|^2 - d_i^2), which goes complex inside a sphere;
// the residual form has the same minimizers on consistent data.)

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "cfcw/demod.hpp"
#include "cfcw/signal_core.hpp"
#include "cfcw/startpoint.hpp"

namespace cfcw {

struct Trajectory3D {
    std::vector<double> timestamps;
    std::vector<Vec3> points;
    std::vector<double> residuals;     // root-mean residual per frame, m
    std::vector<std::uint8_t> valid;
    double source_frame_rate = 1000.0 / 3.0;
    StartFix fix;
};

// Per-frame absolute distances straight from the range tracks; invalid or
// ceiling-flagged frames yield NaN so multilateration drops that mic.
inline std::vector<std::vector<double>> absolute_distances(
    const std::vector<PhaseTrack>& tracks) {
    std::vector<std::vector<double>> dist(tracks.size());
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        const auto& tr = tracks[i];
        dist[i].resize(tr.distance.size());
        for (std::size_t k = 0; k < tr.distance.size(); ++k) {
            bool bad = !tr.valid[k] || (tr.unreliable && k >= tr.unreliable_from);
            dist[i][k] = bad ? std::numeric_limits<double>::quiet_NaN() : tr.distance[k];
        }
    }
    return dist;
}

struct MultilaterateResult {
    Vec3 position;
    double residual = 0.0;  // root-mean distance misfit, m
    bool ok = false;
};

// Damped Gauss-Newton on sum_i (|P - m_i| - d_i)^2. NaN distances drop the
// microphone; fewer than 4 usable mics is under-determined in 3D.
inline MultilaterateResult multilaterate(const std::vector<double>& distances,
                                         const ArrayGeometry& geometry, const Vec3& seed_point,
                                         double workspace_radius = 1.0) {
    std::vector<std::size_t> used;
    for (std::size_t i = 0; i < distances.size(); ++i)
        if (std::isfinite(distances[i])) used.push_back(i);
    if (used.size() < 4) throw Error("insufficient-data", "need at least 4 usable microphones");
    if (!std::isfinite(seed_point.x + seed_point.y + seed_point.z))
        throw Error("invalid-argument", "seed point must be finite");

    Vec3 p = seed_point;
    MultilaterateResult res;
    auto objective = [&](const Vec3& q) {
        double s = 0.0;
        for (std::size_t i : used) {
            double e = distance(q, geometry.mic_positions[i]) - distances[i];
            s += e * e;
        }
        return s;
    };
    double obj = objective(p);
    for (int it = 0; it < 50; ++it) {
        double jtj[3][3] = {};
        double jtr[3] = {};
        for (std::size_t i : used) {
            Vec3 d = p - geometry.mic_positions[i];
            double r = std::max(d.norm(), 1e-9);
            double resid = r - distances[i];
            Vec3 g = d * (1.0 / r);
            double gv[3] = {g.x, g.y, g.z};
            for (int a = 0; a < 3; ++a) {
                jtr[a] += gv[a] * resid;
                for (int b = 0; b < 3; ++b) jtj[a][b] += gv[a] * gv[b];
            }
        }
        double mu = 1e-10 + 1e-4 * (jtj[0][0] + jtj[1][1] + jtj[2][2]);
        bool stepped = false;
        for (int damp = 0; damp < 8 && !stepped; ++damp, mu *= 10.0) {
            double m[3][4] = {{jtj[0][0] + mu, jtj[0][1], jtj[0][2], -jtr[0]},
                              {jtj[1][0], jtj[1][1] + mu, jtj[1][2], -jtr[1]},
                              {jtj[2][0], jtj[2][1], jtj[2][2] + mu, -jtr[2]}};
            for (int c = 0; c < 3; ++c) {
                int piv = c;
                for (int rr = c + 1; rr < 3; ++rr)
                    if (std::abs(m[rr][c]) > std::abs(m[piv][c])) piv = rr;
                if (std::abs(m[piv][c]) < 1e-16) return res;
                std::swap(m[piv], m[c]);
                for (int rr = 0; rr < 3; ++rr) {
                    if (rr == c) continue;
                    double f = m[rr][c] / m[c][c];
                    for (int cc = c; cc < 4; ++cc) m[rr][cc] -= f * m[c][cc];
                }
            }
            Vec3 step{m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]};
            if (!std::isfinite(step.x + step.y + step.z)) return res;
            Vec3 cand = p + step;
            double cand_obj = objective(cand);
            if (cand_obj <= obj) {
                if (distance(cand, seed_point) > workspace_radius) return res;  // diverged
                bool done = distance(cand, p) < 1e-7;
                p = cand;
                obj = cand_obj;
                stepped = true;
                if (done) it = 50;
            }
        }
        if (!stepped) break;
    }
    res.position = p;
    res.residual = std::sqrt(obj / static_cast<double>(used.size()));
    res.ok = true;
    return res;
}

// Per-frame multilateration chained by warm starts. Invalid frames are
// linearly interpolated when the gap is at most `max_gap` frames, otherwise
// they stay flagged invalid.
inline Trajectory3D track_trajectory(const StartFix& fix, const std::vector<PhaseTrack>& tracks,
                                     const ArrayGeometry& geometry, const ToneSchedule& schedule,
                                     int max_gap = 3) {
    if (!fix.converged) throw Error("invalid-argument", "start fix did not converge");
    auto dists = absolute_distances(tracks);
    std::size_t n_frames = dists.empty() ? 0 : dists[0].size();
    for (const auto& d : dists) n_frames = std::min(n_frames, d.size());

    Trajectory3D traj;
    traj.fix = fix;
    traj.source_frame_rate = 1.0 / schedule.hop_period;
    Vec3 seed = fix.position;
    std::vector<double> frame_d(dists.size());
    for (std::size_t k = 0; k < n_frames; ++k) {
        for (std::size_t i = 0; i < dists.size(); ++i) frame_d[i] = dists[i][k];
        traj.timestamps.push_back(static_cast<double>(k) * schedule.hop_period);
        bool ok = false;
        MultilaterateResult r;
        try {
            r = multilaterate(frame_d, geometry, seed);
            ok = r.ok;
        } catch (const Error&) {
            ok = false;
        }
        if (ok) {
            traj.points.push_back(r.position);
            traj.residuals.push_back(r.residual);
            traj.valid.push_back(1);
            seed = r.position;
        } else {
            traj.points.push_back(seed);
            traj.residuals.push_back(std::numeric_limits<double>::quiet_NaN());
            traj.valid.push_back(0);
        }
    }
    // Bridge short invalid gaps by linear interpolation.
    std::size_t k = 0;
    while (k < traj.valid.size()) {
        if (traj.valid[k]) { ++k; continue; }
        std::size_t end = k;
        while (end < traj.valid.size() && !traj.valid[end]) ++end;
        bool bounded = k > 0 && end < traj.valid.size();
        if (bounded && static_cast<int>(end - k) <= max_gap) {
            Vec3 a = traj.points[k - 1], b = traj.points[end];
            for (std::size_t g = k; g < end; ++g) {
                double t = static_cast<double>(g - k + 1) / static_cast<double>(end - k + 1);
                traj.points[g] = a * (1.0 - t) + b * t;
                traj.valid[g] = 1;
            }
        }
        k = end;
    }
    return traj;
}

}  // namespace cfcw
