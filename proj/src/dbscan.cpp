#include "pmucal/dbscan.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace pmucal {

std::size_t Clustering::cluster_size(int label) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

std::size_t Clustering::largest_cluster_size(void) const {
    std::size_t best = 0;
    for (int c = 0; c < cluster_count; ++c) {
        best = std::max(best, cluster_size(c));
    }
    return best;
}

Clustering cluster_dbscan(std::span<const Eigen::VectorXd> points, const DbscanConfig& config) {
    if (points.empty()) {
        throw EmptyInput("clustering requires at least one point");
    }
    if (config.eps <= 0.0 || !std::isfinite(config.eps)) {
        throw Error("eps must be positive and finite");
    }
    if (config.min_pts < 1) {
        throw Error("min_pts must be at least 1");
    }
    const std::size_t n = points.size();
    const Eigen::Index dim = points[0].size();
    for (const auto& p : points) {
        if (p.size() != dim || !p.allFinite()) {
            throw Error("points must share one finite dimension");
        }
    }

    // Naive O(N^2) neighborhoods; every caller stays below a few hundred points.
    std::vector<std::vector<std::size_t>> neighbors(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if ((points[i] - points[j]).norm() <= config.eps) {
                neighbors[i].push_back(j);
            }
        }
    }

    std::vector<bool> core(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        core[i] = neighbors[i].size() >= config.min_pts;
    }

    Clustering result;
    result.labels.assign(n, kOutlier);
    result.roles.assign(n, PointRole::Outlier);

    // Connected components over core points, visited in input order so that
    // cluster ids follow the smallest core index of each component.
    int next_cluster = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!core[i] || result.labels[i] != kOutlier) {
            continue;
        }
        const int cluster = next_cluster++;
        std::deque<std::size_t> frontier{i};
        result.labels[i] = cluster;
        while (!frontier.empty()) {
            const std::size_t p = frontier.front();
            frontier.pop_front();
            result.roles[p] = PointRole::Core;
            for (std::size_t q : neighbors[p]) {
                if (core[q] && result.labels[q] == kOutlier) {
                    result.labels[q] = cluster;
                    frontier.push_back(q);
                }
            }
        }
    }
    result.cluster_count = next_cluster;

    // Border points attach to the cluster of their smallest-index core
    // neighbor (documented tie-break).
    for (std::size_t i = 0; i < n; ++i) {
        if (core[i]) {
            continue;
        }
        for (std::size_t q : neighbors[i]) {
            if (core[q]) {
                result.labels[i] = result.labels[q];
                result.roles[i] = PointRole::Reachable;
                break;
            }
        }
    }
    return result;
}

Clustering cluster_dbscan(std::span<const double> points, const DbscanConfig& config) {
    std::vector<Eigen::VectorXd> wrapped;
    wrapped.reserve(points.size());
    for (double v : points) {
        wrapped.push_back(Eigen::VectorXd::Constant(1, v));
    }
    return cluster_dbscan(wrapped, config);
}

} // namespace pmucal
