#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "coopdqn/error.hpp"
#include "coopdqn/rng.hpp"
#include "coopdqn/tinynet.hpp"

namespace coopdqn {

/// Mean of the last t_eval entries of a cooperation trace.
inline double mean_cooperation(std::span<const double> trace, std::size_t t_eval) {
    if (t_eval == 0 || trace.size() < t_eval) throw ConfigError("mean_cooperation: trace shorter than t_eval");
    double s = 0.0;
    for (std::size_t k = trace.size() - t_eval; k < trace.size(); ++k) s += trace[k];
    return s / static_cast<double>(t_eval);
}

enum class RangeMarker { Inside, AboveRange, BelowRange };

inline std::string to_string(RangeMarker m) {
    switch (m) {
        case RangeMarker::Inside: return "inside";
        case RangeMarker::AboveRange: return "above_range";
        case RangeMarker::BelowRange: return "below_range";
    }
    return "?";
}

struct ThresholdResult {
    RangeMarker marker = RangeMarker::Inside;
    /// Largest qualifying d_r; set only when marker == Inside.
    std::optional<double> d_r_star;
    double criterion = 0.0;
};

/// Collapse threshold over an ascending d_r grid: the largest d_r whose mean
/// cooperation exceeds the criterion (strictly, unless `strict` is false).
/// AboveRange when every grid point qualifies, BelowRange when none does.
inline ThresholdResult collapse_threshold(std::span<const std::pair<double, double>> coop_by_dr, double criterion,
                                          bool strict = true) {
    if (coop_by_dr.empty()) throw ConfigError("collapse_threshold: empty grid");
    for (std::size_t k = 1; k < coop_by_dr.size(); ++k)
        if (!(coop_by_dr[k].first > coop_by_dr[k - 1].first))
            throw ConfigError("collapse_threshold: d_r grid must be strictly ascending");
    auto qualifies = [&](double c) { return strict ? c > criterion : c >= criterion; };
    std::optional<double> best;
    std::size_t n_ok = 0;
    for (const auto& [dr, c] : coop_by_dr)
        if (qualifies(c)) {
            best = dr;
            ++n_ok;
        }
    ThresholdResult r;
    r.criterion = criterion;
    if (n_ok == coop_by_dr.size()) r.marker = RangeMarker::AboveRange;
    else if (n_ok == 0) r.marker = RangeMarker::BelowRange;
    else r.d_r_star = best;
    return r;
}

struct QStats {
    double q_mean = 0.0;
    double q_gap = 0.0;
};

/// q_mean = mean |Q| over states and both actions; q_gap = mean |Q(s,C) - Q(s,D)|.
inline QStats q_stats(std::span<const QPair> q_values) {
    if (q_values.empty()) throw ConfigError("q_stats: empty state sample");
    double abs_sum = 0.0, gap_sum = 0.0;
    for (const auto& q : q_values) {
        abs_sum += std::abs(q[0]) + std::abs(q[1]);
        gap_sum += std::abs(q[0] - q[1]);
    }
    const auto n = static_cast<double>(q_values.size());
    return {abs_sum / (2.0 * n), gap_sum / n};
}

/// Row-major point set.
struct PointSet {
    std::size_t dim = 0;
    std::vector<double> data;

    std::size_t size() const noexcept { return dim == 0 ? 0 : data.size() / dim; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
    void push(std::span<const double> p) {
        if (dim == 0) dim = p.size();
        if (p.size() != dim) throw ConfigError("PointSet: dimension mismatch");
        data.insert(data.end(), p.begin(), p.end());
    }
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

struct ClusterDiagnostic {
    std::vector<int> assignments;
    std::array<std::vector<double>, 2> centroids;
    double sse = 0.0;
    std::size_t iterations = 0;
};

namespace detail {

inline bool has_two_distinct(const PointSet& pts) {
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (squared_distance(pts.row(0), pts.row(i)) > 0.0) return true;
    return false;
}

inline double assign_and_sse(const PointSet& pts, const std::array<std::vector<double>, 2>& c,
                             std::vector<int>& labels) {
    double sse = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double d0 = squared_distance(pts.row(i), c[0]);
        const double d1 = squared_distance(pts.row(i), c[1]);
        labels[i] = d1 < d0 ? 1 : 0;
        sse += std::min(d0, d1);
    }
    return sse;
}

inline void update_centroids(const PointSet& pts, std::vector<int>& labels, std::array<std::vector<double>, 2>& c) {
    std::array<std::size_t, 2> counts{0, 0};
    for (auto& v : c) std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        auto& dst = c[static_cast<std::size_t>(labels[i])];
        const auto p = pts.row(i);
        for (std::size_t k = 0; k < pts.dim; ++k) dst[k] += p[k];
        ++counts[static_cast<std::size_t>(labels[i])];
    }
    for (int k = 0; k < 2; ++k)
        if (counts[k] > 0)
            for (auto& v : c[k]) v /= static_cast<double>(counts[k]);
    for (int k = 0; k < 2; ++k) {
        if (counts[k] > 0) continue;
        // empty cluster: move the point farthest from the other centroid into it
        const int other = 1 - k;
        std::size_t far = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double d = squared_distance(pts.row(i), c[other]);
            if (d > best) {
                best = d;
                far = i;
            }
        }
        labels[far] = k;
        const auto p = pts.row(far);
        c[k].assign(p.begin(), p.end());
        // recompute the donor cluster without the moved point
        std::fill(c[other].begin(), c[other].end(), 0.0);
        std::size_t n_other = 0;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (labels[i] == other) {
                const auto q = pts.row(i);
                for (std::size_t d = 0; d < pts.dim; ++d) c[other][d] += q[d];
                ++n_other;
            }
        for (auto& v : c[other]) v /= static_cast<double>(n_other);
    }
}

inline ClusterDiagnostic kmeans2_single(const PointSet& pts, Rng& rng, std::size_t max_iter) {
    const std::size_t n = pts.size();
    ClusterDiagnostic out;
    // k-means++: first center uniform, second proportional to squared distance
    const std::size_t first = rng.index(n);
    out.centroids[0].assign(pts.row(first).begin(), pts.row(first).end());
    std::vector<double> w(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += (w[i] = squared_distance(pts.row(i), out.centroids[0]));
    double u = rng.uniform01() * total;
    std::size_t second = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (w[i] > 0.0 && u < w[i]) {
            second = i;
            break;
        }
        u -= w[i];
    }
    while (w[second] == 0.0) second = (second + n - 1) % n;
    out.centroids[1].assign(pts.row(second).begin(), pts.row(second).end());

    out.assignments.assign(n, 0);
    double sse = assign_and_sse(pts, out.centroids, out.assignments);
    for (std::size_t it = 0; it < max_iter; ++it) {
        const auto prev = out.assignments;
        update_centroids(pts, out.assignments, out.centroids);
        sse = assign_and_sse(pts, out.centroids, out.assignments);
        out.iterations = it + 1;
        if (out.assignments == prev) break;
    }
    // the final assignment may have emptied a cluster
    if (std::count(out.assignments.begin(), out.assignments.end(), 1) == 0 ||
        std::count(out.assignments.begin(), out.assignments.end(), 0) == 0) {
        update_centroids(pts, out.assignments, out.centroids);
        sse = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            sse += squared_distance(pts.row(i), out.centroids[static_cast<std::size_t>(out.assignments[i])]);
    }
    out.sse = sse;
    return out;
}

} // namespace detail

/// Within-cluster sum of squared distances to each cluster's mean.
inline double cluster_sse(const PointSet& pts, std::span<const int> labels) {
    std::array<std::vector<double>, 2> c{std::vector<double>(pts.dim, 0.0), std::vector<double>(pts.dim, 0.0)};
    std::array<std::size_t, 2> cnt{0, 0};
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto k = static_cast<std::size_t>(labels[i]);
        for (std::size_t d = 0; d < pts.dim; ++d) c[k][d] += pts.row(i)[d];
        ++cnt[k];
    }
    for (int k = 0; k < 2; ++k)
        if (cnt[k]) for (auto& v : c[k]) v /= static_cast<double>(cnt[k]);
    double s = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        s += squared_distance(pts.row(i), c[static_cast<std::size_t>(labels[i])]);
    return s;
}

/// Two-cluster k-means: k-means++ seeding and Lloyd iterations, restarted
/// n_init times; the lowest-SSE result is kept.
inline ClusterDiagnostic kmeans2(const PointSet& pts, std::uint64_t seed, std::size_t max_iter = 100,
                                 std::size_t n_init = 10) {
    if (pts.size() < 2 || !detail::has_two_distinct(pts))
        throw ConfigError("kmeans2: need at least 2 distinct points");
    Rng rng(seed);
    std::optional<ClusterDiagnostic> best;
    for (std::size_t r = 0; r < std::max<std::size_t>(n_init, 1); ++r) {
        auto cand = detail::kmeans2_single(pts, rng, max_iter);
        if (!best || cand.sse < best->sse) best = std::move(cand);
    }
    return *best;
}

/// Mean silhouette with Euclidean distance; points in a singleton cluster score 0.
inline double silhouette(const PointSet& pts, std::span<const int> labels) {
    const std::size_t n = pts.size();
    if (labels.size() != n) throw ConfigError("silhouette: label count mismatch");
    std::array<std::size_t, 2> cnt{0, 0};
    for (int l : labels) {
        if (l != 0 && l != 1) throw ConfigError("silhouette: labels must be 0 or 1");
        ++cnt[static_cast<std::size_t>(l)];
    }
    if (cnt[0] == 0 || cnt[1] == 0) throw ConfigError("silhouette: a cluster is empty");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto own = static_cast<std::size_t>(labels[i]);
        if (cnt[own] == 1) continue;
        std::array<double, 2> sum{0.0, 0.0};
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            sum[static_cast<std::size_t>(labels[j])] += std::sqrt(squared_distance(pts.row(i), pts.row(j)));
        }
        const double a = sum[own] / static_cast<double>(cnt[own] - 1);
        const double b = sum[1 - own] / static_cast<double>(cnt[1 - own]);
        const double m = std::max(a, b);
        total += m > 0.0 ? (b - a) / m : 0.0;
    }
    return total / static_cast<double>(n);
}

/// One result row of a sweep, keyed by its axis labels.
struct SweepRow {
    std::map<std::string, std::string> keys;
    std::uint64_t seed = 0;
    double coop_mean = 0.0;
    double q_mean = 0.0;
    double q_gap = 0.0;
    double silhouette = 0.0;
};

struct CellSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double sd = 0.0;
};

struct MetricSummary {
    CellSummary coop_mean, q_mean, q_gap, silhouette;
};

namespace detail {

inline CellSummary summarize(std::vector<double> v) {
    CellSummary s;
    // NaN entries (e.g. undefined silhouette) are excluded from the count
    std::erase_if(v, [](double x) { return std::isnan(x); });
    s.count = v.size();
    if (v.empty()) {
        s.mean = s.sd = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    // sorting makes the result independent of row order
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return s;
}

} // namespace detail

/// Groups rows by every key except the seed; reports mean, sample sd and count per metric.
inline std::map<std::map<std::string, std::string>, MetricSummary> aggregate_seeds(std::span<const SweepRow> rows) {
    std::map<std::map<std::string, std::string>, std::array<std::vector<double>, 4>> cells;
    for (const auto& r : rows) {
        auto& c = cells[r.keys];
        c[0].push_back(r.coop_mean);
        c[1].push_back(r.q_mean);
        c[2].push_back(r.q_gap);
        c[3].push_back(r.silhouette);
    }
    std::map<std::map<std::string, std::string>, MetricSummary> out;
    for (auto& [k, c] : cells)
        out[k] = {detail::summarize(std::move(c[0])), detail::summarize(std::move(c[1])),
                  detail::summarize(std::move(c[2])), detail::summarize(std::move(c[3]))};
    return out;
}

} // namespace coopdqn
