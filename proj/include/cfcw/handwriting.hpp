// handwriting.hpp - 3D trajectory to 2D ink
//
// Stroke ends show up as velocity minima; the clusters of slow samples pin
// the writing surface, segments arcing off that surface are pen lifts, and
// the surviving strokes are flattened with an Isomap embedding (k-NN graph
// geodesics + classical MDS) so curved writing surfaces unroll without
// squeezing the glyphs.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include "cfcw/localize.hpp"
#include "cfcw/signal_core.hpp"

namespace cfcw {

struct VelocityProfile {
    std::vector<double> timestamps;  // interior samples of the trajectory
    std::vector<double> speeds;      // m/s, central difference, smoothed
};

struct Cluster {
    Vec3 point;            // centroid of the low-speed span
    std::size_t begin = 0;  // frame span [begin, end) in trajectory indices
    std::size_t end = 0;
    double mean_speed = 0.0;
};

struct ClusterSet {
    std::vector<Cluster> clusters;  // time ordered, non-overlapping
};

struct StrokeSegment {
    std::size_t begin = 0;  // frame span [begin, end)
    std::size_t end = 0;
    bool pen_lift = false;
    double mean_offplane = 0.0;  // mean orthogonal distance to its cluster plane
};

struct SurfaceModel {
    Vec3 origin;
    Vec3 ax, ay, az;            // orthonormal local frame, az = surface normal
    std::array<double, 10> coeff{};  // z' = f(x',y'), third-order bivariate
    double rms_residual = 0.0;

    static double basis(int k, double x, double y) {
        switch (k) {
            case 0: return 1.0;
            case 1: return x;
            case 2: return y;
            case 3: return x * x;
            case 4: return x * y;
            case 5: return y * y;
            case 6: return x * x * x;
            case 7: return x * x * y;
            case 8: return x * y * y;
            default: return y * y * y;
        }
    }
    double height(double x, double y) const {
        double z = 0.0;
        for (int k = 0; k < 10; ++k) z += coeff[k] * basis(k, x, y);
        return z;
    }
    Vec3 local(const Vec3& p) const {
        Vec3 d = p - origin;
        return {d.dot(ax), d.dot(ay), d.dot(az)};
    }
    Vec3 world(const Vec3& l) const { return origin + ax * l.x + ay * l.y + az * l.z; }
};

struct Ink2D {
    std::vector<std::vector<std::array<double, 2>>> strokes;  // meters
    std::array<double, 4> bounding_box{};                     // xmin, ymin, xmax, ymax
    double stress = 0.0;  // normalized geodesic-distance residual of the embedding
};

struct HandwritingParams {
    int smooth_window = 5;          // frames (15 ms at 333 Hz)
    double min_prominence = 0.2;    // fraction of the median speed
    double k_mad = 3.0;             // spurious-cluster rejection
    double lift_scale = 2.0;        // threshold = lift_scale * median in-plane deviation
    double lift_floor = 0.002;      // m, lower bound on the lift threshold
    int k_neighbors = 8;            // Isomap graph degree (escalates to 12)
};

inline VelocityProfile compute_velocity(const Trajectory3D& traj, int smooth_window = 5) {
    if (traj.points.size() < 3)
        throw Error("insufficient-data", "need at least 3 trajectory points");
    VelocityProfile prof;
    for (std::size_t i = 1; i + 1 < traj.points.size(); ++i) {
        double dt = traj.timestamps[i + 1] - traj.timestamps[i - 1];
        prof.timestamps.push_back(traj.timestamps[i]);
        prof.speeds.push_back(distance(traj.points[i + 1], traj.points[i - 1]) / dt);
    }
    if (smooth_window > 1) {
        std::vector<double> sm(prof.speeds.size());
        int half = smooth_window / 2;
        for (std::size_t i = 0; i < prof.speeds.size(); ++i) {
            double acc = 0.0;
            int cnt = 0;
            for (int d = -half; d <= half; ++d) {
                std::ptrdiff_t k = static_cast<std::ptrdiff_t>(i) + d;
                if (k < 0 || k >= static_cast<std::ptrdiff_t>(prof.speeds.size())) continue;
                acc += prof.speeds[k];
                ++cnt;
            }
            sm[i] = acc / cnt;
        }
        prof.speeds = std::move(sm);
    }
    return prof;
}

namespace detail {

inline double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
}

}  // namespace detail

// Local minima of the velocity profile with sufficient prominence become
// clusters; the cluster point is the centroid of the surrounding slow span.
inline ClusterSet detect_clusters(const VelocityProfile& prof, const Trajectory3D& traj,
                                  double min_prominence = 0.2) {
    if (!(min_prominence > 0.0))
        throw Error("invalid-configuration", "min_prominence must be positive");
    const auto& s = prof.speeds;
    ClusterSet set;
    if (s.size() < 3) return set;
    double med = detail::median_of(s);
    double need = min_prominence * med;

    std::size_t last_end = 0;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        if (!(s[i] <= s[i - 1] && s[i] <= s[i + 1])) continue;
        // Prominence: lowest of the highest barriers on each side.
        double left = 0.0;
        for (std::size_t k = i; k-- > 0;) {
            left = std::max(left, s[k] - s[i]);
            if (s[k] < s[i]) break;
        }
        double right = 0.0;
        for (std::size_t k = i + 1; k < s.size(); ++k) {
            right = std::max(right, s[k] - s[i]);
            if (s[k] < s[i]) break;
        }
        double prom = std::min(left, right);
        if (prom < need) continue;
        // Slow span around the minimum.
        double lim = s[i] + 0.25 * prom;
        std::size_t b = i, e = i + 1;
        while (b > 0 && s[b - 1] <= lim) --b;
        while (e < s.size() && s[e] <= lim) ++e;
        // Profile index i corresponds to trajectory index i+1.
        Cluster c;
        c.begin = std::max(b + 1, last_end);
        c.end = e + 1;
        if (c.begin >= c.end) continue;
        Vec3 acc;
        double sp = 0.0;
        for (std::size_t k = c.begin; k < c.end; ++k) acc += traj.points[k];
        for (std::size_t k = b; k < e; ++k) sp += s[k];
        c.point = acc * (1.0 / static_cast<double>(c.end - c.begin));
        c.mean_speed = sp / static_cast<double>(e - b);
        set.clusters.push_back(c);
        last_end = c.end;
        i = e;
    }
    return set;
}

inline SurfaceModel fit_writing_surface(const std::vector<Vec3>& points) {
    if (points.size() < 10)
        throw Error("insufficient-data", "surface fit needs at least 10 points");
    Vec3 centroid;
    for (const auto& p : points) centroid += p;
    centroid = centroid * (1.0 / static_cast<double>(points.size()));
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : points) {
        Eigen::Vector3d d(p.x - centroid.x, p.y - centroid.y, p.z - centroid.z);
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    Eigen::Vector3d e0 = eig.eigenvectors().col(2);  // largest
    Eigen::Vector3d e1 = eig.eigenvectors().col(1);
    Eigen::Vector3d e2 = eig.eigenvectors().col(0);  // normal
    double n = static_cast<double>(points.size());
    if (std::sqrt(eig.eigenvalues()(2) / n) < 0.01 || std::sqrt(eig.eigenvalues()(1) / n) < 1e-4)
        throw Error("degenerate-cloud", "points do not span a surface patch");

    SurfaceModel m;
    m.origin = centroid;
    m.ax = {e0.x(), e0.y(), e0.z()};
    m.ay = {e1.x(), e1.y(), e1.z()};
    m.az = {e2.x(), e2.y(), e2.z()};

    Eigen::MatrixXd A(points.size(), 10);
    Eigen::VectorXd z(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        Vec3 l = m.local(points[i]);
        for (int k = 0; k < 10; ++k) A(i, k) = SurfaceModel::basis(k, l.x, l.y);
        z(i) = l.z;
    }
    Eigen::MatrixXd reg = Eigen::MatrixXd::Identity(10, 10) * 1e-10;
    Eigen::VectorXd c = (A.transpose() * A + reg).ldlt().solve(A.transpose() * z);
    for (int k = 0; k < 10; ++k) m.coeff[k] = c(k);
    m.rms_residual = std::sqrt((A * c - z).squaredNorm() / n);
    return m;
}

// Drops clusters far off the third-order surface through all cluster points
// (spurious stops on pen-lift arcs). Fewer than 4 clusters pass through.
inline ClusterSet prune_spurious_clusters(const ClusterSet& set, double k_mad = 3.0) {
    if (set.clusters.size() < 4) return set;
    std::vector<Vec3> pts;
    for (const auto& c : set.clusters) pts.push_back(c.point);
    SurfaceModel m;
    try {
        // The regularized fit tolerates few points; degenerate clouds skip pruning.
        std::vector<Vec3> padded = pts;
        while (padded.size() < 10) padded.push_back(pts[padded.size() % pts.size()]);
        m = fit_writing_surface(padded);
    } catch (const Error&) {
        return set;
    }
    std::vector<double> dist;
    for (const auto& p : pts) {
        Vec3 l = m.local(p);
        dist.push_back(std::abs(l.z - m.height(l.x, l.y)));
    }
    double med = detail::median_of(dist);
    std::vector<double> dev;
    for (double d : dist) dev.push_back(std::abs(d - med));
    double mad = std::max(detail::median_of(dev), 1e-5);
    ClusterSet out;
    for (std::size_t i = 0; i < set.clusters.size(); ++i)
        if (dist[i] <= med + k_mad * mad) out.clusters.push_back(set.clusters[i]);
    return out.clusters.size() >= 3 ? out : set;
}

// Splits the trajectory at clusters and classifies each segment as stroke or
// pen lift by its mean orthogonal distance from the triangular plane through
// its endpoint clusters and the temporally nearest third cluster.
inline std::vector<StrokeSegment> remove_pen_lifts(const Trajectory3D& traj,
                                                   const ClusterSet& set,
                                                   const HandwritingParams& params = {}) {
    const auto& cl = set.clusters;
    if (cl.size() < 3) throw Error("insufficient-data", "pen-lift removal needs >= 3 clusters");

    std::vector<StrokeSegment> segs;
    for (std::size_t s = 0; s + 1 < cl.size(); ++s) {
        StrokeSegment seg;
        seg.begin = cl[s].end;
        seg.end = cl[s + 1].begin;
        if (seg.begin >= seg.end) continue;
        // Plane through the two endpoint clusters and the nearest other one.
        std::size_t third = (s > 0) ? s - 1 : s + 2;
        Vec3 a = cl[s].point, b = cl[s + 1].point, c = cl[third].point;
        Vec3 normal = (b - a).cross(c - a);
        if (normal.norm() < 1e-9 && cl.size() > third + 1)
            normal = (b - a).cross(cl[third + 1].point - a);
        double acc = 0.0;
        std::size_t cnt = 0;
        if (normal.norm() > 1e-9) {
            Vec3 nn = normal.normalized();
            for (std::size_t k = seg.begin; k < seg.end; ++k) {
                acc += std::abs(nn.dot(traj.points[k] - a));
                ++cnt;
            }
        }
        seg.mean_offplane = cnt ? acc / static_cast<double>(cnt) : 0.0;
        segs.push_back(seg);
    }
    if (segs.empty()) throw Error("empty-ink", "no segments between clusters");

    std::vector<double> means;
    for (const auto& s : segs) means.push_back(s.mean_offplane);
    double threshold = std::max(params.lift_scale * detail::median_of(means), params.lift_floor);
    std::size_t lifts = 0;
    for (auto& s : segs)
        if ((s.pen_lift = s.mean_offplane > threshold)) ++lifts;
    if (lifts == segs.size()) throw Error("empty-ink", "every segment classified as pen lift");
    return segs;
}

namespace detail {

struct GraphResult {
    Eigen::MatrixXd geodesic;  // all-pairs shortest paths
    bool connected = true;
    std::vector<std::size_t> component_sizes;
};

inline GraphResult knn_geodesics(const std::vector<Vec3>& pts, int k) {
    const std::size_t n = pts.size();
    std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<double, std::size_t>> d;
        d.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) d.push_back({distance(pts[i], pts[j]), j});
        std::size_t kk = std::min<std::size_t>(k, d.size());
        std::partial_sort(d.begin(), d.begin() + kk, d.end());
        for (std::size_t m = 0; m < kk; ++m) {
            adj[i].push_back({d[m].second, d[m].first});
            adj[d[m].second].push_back({i, d[m].first});
        }
    }
    GraphResult res;
    // Connectivity.
    std::vector<int> comp(n, -1);
    for (std::size_t s = 0; s < n; ++s) {
        if (comp[s] != -1) continue;
        int id = static_cast<int>(res.component_sizes.size());
        std::size_t size = 0;
        std::vector<std::size_t> stack{s};
        comp[s] = id;
        while (!stack.empty()) {
            std::size_t u = stack.back();
            stack.pop_back();
            ++size;
            for (auto& [v, w] : adj[u])
                if (comp[v] == -1) {
                    comp[v] = id;
                    stack.push_back(v);
                }
        }
        res.component_sizes.push_back(size);
    }
    res.connected = res.component_sizes.size() == 1;
    if (!res.connected) return res;

    res.geodesic.resize(n, n);
    using Item = std::pair<double, std::size_t>;
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<double> dist(n, std::numeric_limits<double>::infinity());
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        dist[s] = 0.0;
        pq.push({0.0, s});
        while (!pq.empty()) {
            auto [du, u] = pq.top();
            pq.pop();
            if (du > dist[u]) continue;
            for (auto& [v, w] : adj[u])
                if (du + w < dist[v]) {
                    dist[v] = du + w;
                    pq.push({dist[v], v});
                }
        }
        for (std::size_t j = 0; j < n; ++j) res.geodesic(s, j) = dist[j];
    }
    return res;
}

}  // namespace detail

// Isomap flattening of stroke points already projected onto the writing
// surface. Returns an Ink2D whose strokes re-thread the embedded points in
// the original time order, Procrustes-aligned to the surface's local frame
// and rotated so the dominant writing direction runs along +x.
inline Ink2D flatten_isomap(const std::vector<Vec3>& points,
                            const std::vector<std::vector<std::size_t>>& strokes,
                            int k_neighbors = 8) {
    const std::size_t n = points.size();
    if (n < 4) throw Error("insufficient-data", "too few points to flatten");
    auto g = detail::knn_geodesics(points, k_neighbors);
    if (!g.connected) {
        g = detail::knn_geodesics(points, std::max(k_neighbors, 12));
        if (!g.connected) {
            std::string sizes;
            for (auto s : g.component_sizes) sizes += std::to_string(s) + " ";
            throw Error("disconnected-graph", "component sizes: " + sizes);
        }
    }

    // Classical MDS of the squared geodesic distances.
    Eigen::MatrixXd d2 = g.geodesic.array().square();
    Eigen::VectorXd row_mean = d2.rowwise().mean();
    double total_mean = d2.mean();
    Eigen::MatrixXd b(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            b(i, j) = -0.5 * (d2(i, j) - row_mean(i) - row_mean(j) + total_mean);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
    Eigen::MatrixXd emb(n, 2);
    for (int c = 0; c < 2; ++c) {
        double lam = std::max(eig.eigenvalues()(n - 1 - c), 0.0);
        emb.col(c) = eig.eigenvectors().col(n - 1 - c) * std::sqrt(lam);
    }

    // Orthogonal Procrustes onto the surface-frame planar coordinates keeps
    // the glyphs unmirrored.
    Eigen::MatrixXd ref(n, 2);
    Vec3 centroid;
    for (const auto& p : points) centroid += p;
    centroid = centroid * (1.0 / static_cast<double>(n));
    {
        // Planar reference: PCA of the points themselves.
        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        for (const auto& p : points) {
            Eigen::Vector3d d(p.x - centroid.x, p.y - centroid.y, p.z - centroid.z);
            cov += d * d.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> pe(cov);
        Eigen::Vector3d ax = pe.eigenvectors().col(2), ay = pe.eigenvectors().col(1);
        for (std::size_t i = 0; i < n; ++i) {
            Eigen::Vector3d d(points[i].x - centroid.x, points[i].y - centroid.y,
                              points[i].z - centroid.z);
            ref(i, 0) = ax.dot(d);
            ref(i, 1) = ay.dot(d);
        }
    }
    Eigen::MatrixXd centered = emb.rowwise() - emb.colwise().mean();
    Eigen::Matrix2d cross = ref.transpose() * centered;
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix2d rot = svd.matrixU() * svd.matrixV().transpose();
    Eigen::MatrixXd aligned = (rot * centered.transpose()).transpose();

    // Dominant writing direction along +x, time running left to right.
    {
        Eigen::Matrix2d c2 = aligned.transpose() * aligned;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> e2(c2);
        Eigen::Vector2d major = e2.eigenvectors().col(1);
        Eigen::Vector2d minor(-major.y(), major.x());
        Eigen::MatrixXd r(n, 2);
        r.col(0) = aligned * major;
        r.col(1) = aligned * minor;
        std::size_t head = std::min<std::size_t>(n / 10 + 1, n);
        double front = r.col(0).head(head).mean(), back = r.col(0).tail(head).mean();
        if (back < front) {  // rotate by pi, keeping orientation (no mirror)
            r.col(0) = -r.col(0);
            r.col(1) = -r.col(1);
        }
        aligned = r;
    }

    Ink2D ink;
    double gsum = 0.0, esum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double de = (aligned.row(i) - aligned.row(j)).norm();
            double dg = g.geodesic(i, j);
            gsum += dg * dg;
            esum += (dg - de) * (dg - de);
        }
    ink.stress = gsum > 0 ? std::sqrt(esum / gsum) : 0.0;

    double xmin = 1e30, ymin = 1e30, xmax = -1e30, ymax = -1e30;
    for (const auto& st : strokes) {
        std::vector<std::array<double, 2>> poly;
        for (std::size_t idx : st) {
            poly.push_back({aligned(idx, 0), aligned(idx, 1)});
            xmin = std::min(xmin, aligned(idx, 0));
            xmax = std::max(xmax, aligned(idx, 0));
            ymin = std::min(ymin, aligned(idx, 1));
            ymax = std::max(ymax, aligned(idx, 1));
        }
        if (!poly.empty()) ink.strokes.push_back(std::move(poly));
    }
    ink.bounding_box = {xmin, ymin, xmax, ymax};
    return ink;
}

struct InkRecovery {
    ClusterSet clusters;
    std::vector<StrokeSegment> segments;
    SurfaceModel surface;
    Ink2D ink;
};

// Full chain: velocity -> clusters -> prune -> pen lifts -> surface ->
// orthographic projection onto the surface -> Isomap flattening.
inline InkRecovery recover_ink(const Trajectory3D& traj, const HandwritingParams& params = {}) {
    auto prof = compute_velocity(traj, params.smooth_window);
    auto clusters = detect_clusters(prof, traj, params.min_prominence);
    if (clusters.clusters.empty()) throw Error("no-writing-detected", "no velocity clusters");
    clusters = prune_spurious_clusters(clusters, params.k_mad);
    auto segments = remove_pen_lifts(traj, clusters, params);

    InkRecovery out;
    out.clusters = clusters;
    out.segments = segments;
    std::vector<Vec3> stroke_points;
    std::vector<std::vector<std::size_t>> strokes;
    for (const auto& s : segments) {
        if (s.pen_lift) continue;
        std::vector<std::size_t> idx;
        for (std::size_t k = s.begin; k < s.end; ++k) {
            idx.push_back(stroke_points.size());
            stroke_points.push_back(traj.points[k]);
        }
        if (idx.size() >= 2) strokes.push_back(std::move(idx));
    }
    if (stroke_points.size() < 10) throw Error("empty-ink", "not enough stroke samples");
    out.surface = fit_writing_surface(stroke_points);
    for (auto& p : stroke_points) {
        Vec3 l = out.surface.local(p);
        l.z = out.surface.height(l.x, l.y);
        p = out.surface.world(l);
    }
    out.ink = flatten_isomap(stroke_points, strokes, params.k_neighbors);
    return out;
}

}  // namespace cfcw
