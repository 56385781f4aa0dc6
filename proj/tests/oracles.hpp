#pragma once

// Independent reference computations used only by tests.

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <vector>

#include "coopdqn/analysis.hpp"
#include "coopdqn/tinynet.hpp"

namespace oracle {

/// Mean batch loss computed from scratch (no shared code with the network's forward).
inline double batch_loss(const coopdqn::QNetworkParams& p, const std::vector<std::vector<double>>& xs,
                         const std::vector<int>& actions, const std::vector<double>& targets, bool huber,
                         double delta) {
    double total = 0.0;
    for (std::size_t b = 0; b < xs.size(); ++b) {
        double q = p.b2(actions[b]);
        for (std::size_t h = 0; h < p.hidden_dim(); ++h) {
            double z = p.b1(h);
            for (std::size_t i = 0; i < p.input_dim(); ++i) z += p.w1(h, i) * xs[b][i];
            q += p.w2(actions[b], h) * std::max(z, 0.0);
        }
        const double r = q - targets[b];
        if (!huber) total += r * r;
        else total += std::abs(r) <= delta ? 0.5 * r * r : delta * (std::abs(r) - 0.5 * delta);
    }
    return total / static_cast<double>(xs.size());
}

/// Central-difference step no larger than `h_max` that keeps every ReLU
/// pre-activation and every Huber residual on its side of the kink. A single
/// coordinate moves a pre-activation by at most h*max|x| and a residual by at
/// most h*max(1, |hidden|, |w2|*max|x|).
inline double kink_safe_step(const coopdqn::QNetworkParams& p, const std::vector<std::vector<double>>& xs,
                             const std::vector<int>& actions, const std::vector<double>& targets, bool huber,
                             double delta, double h_max = 1e-5) {
    double h = h_max;
    double w2_max = 0.0;
    for (double v : p.flat().subspan(p.input_dim() * p.hidden_dim() + p.hidden_dim(), 2 * p.hidden_dim()))
        w2_max = std::max(w2_max, std::abs(v));
    for (std::size_t b = 0; b < xs.size(); ++b) {
        double x_max = 1.0;
        for (double v : xs[b]) x_max = std::max(x_max, std::abs(v));
        double q = p.b2(actions[b]), hid_max = 1.0;
        for (std::size_t k = 0; k < p.hidden_dim(); ++k) {
            double z = p.b1(k);
            for (std::size_t i = 0; i < p.input_dim(); ++i) z += p.w1(k, i) * xs[b][i];
            h = std::min(h, 0.5 * std::abs(z) / x_max);
            q += p.w2(actions[b], k) * std::max(z, 0.0);
            hid_max = std::max(hid_max, std::max(z, 0.0));
        }
        if (huber) {
            const double slope = std::max(hid_max, w2_max * x_max);
            h = std::min(h, 0.5 * std::abs(std::abs(q - targets[b]) - delta) / slope);
        }
    }
    return h;
}

/// Per-point silhouette straight from the definition, accumulated point by point.
inline double silhouette(const coopdqn::PointSet& pts, const std::vector<int>& labels) {
    const std::size_t n = pts.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double same = 0.0, other = 0.0;
        std::size_t n_same = 0, n_other = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double d2 = 0.0;
            for (std::size_t k = 0; k < pts.dim; ++k) d2 += (pts.row(i)[k] - pts.row(j)[k]) * (pts.row(i)[k] - pts.row(j)[k]);
            if (labels[j] == labels[i]) {
                same += std::sqrt(d2);
                ++n_same;
            } else {
                other += std::sqrt(d2);
                ++n_other;
            }
        }
        if (n_same == 0) continue;
        const double a = same / static_cast<double>(n_same);
        const double b = other / static_cast<double>(n_other);
        const double m = std::max(a, b);
        acc += m > 0.0 ? (b - a) / m : 0.0;
    }
    return acc / static_cast<double>(n);
}

/// Minimum within-cluster SSE over every split into two nonempty clusters (n <= ~16).
inline double best_two_partition_sse(const coopdqn::PointSet& pts) {
    const std::size_t n = pts.size();
    double best = std::numeric_limits<double>::infinity();
    for (unsigned long mask = 1; mask < (1ul << n) - 1; ++mask) {
        if (mask & 1ul) continue; // point 0 always in cluster 0: skip mirror images
        std::vector<int> lab(n);
        for (std::size_t i = 0; i < n; ++i) lab[i] = (mask >> i) & 1ul;
        best = std::min(best, coopdqn::cluster_sse(pts, lab));
    }
    return best;
}

} // namespace oracle
