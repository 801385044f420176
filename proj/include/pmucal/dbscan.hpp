#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pmucal/errors.hpp"

namespace pmucal {

struct DbscanConfig {
    double eps = 0.0;        ///< search distance, closed ball (<= eps)
    std::size_t min_pts = 1; ///< neighborhood count, includes the point itself
};

enum class PointRole { Core, Reachable, Outlier };

inline constexpr int kOutlier = -1;

struct Clustering {
    std::vector<int> labels; ///< cluster id >= 0, or kOutlier
    std::vector<PointRole> roles;
    int cluster_count = 0;

    std::size_t cluster_size(int label) const;
    std::size_t largest_cluster_size() const;
};

/// Density-based clustering with Euclidean metric. Core points have at least
/// min_pts neighbors within eps (themselves included); non-core points with
/// a core neighbor are reachable and join the cluster of the smallest-index
/// claiming core; the rest are outliers. Clusters are numbered by the
/// smallest input index of any of their core points.
Clustering cluster_dbscan(std::span<const Eigen::VectorXd> points, const DbscanConfig& config);

/// Convenience overload for scalar points.
Clustering cluster_dbscan(std::span<const double> points, const DbscanConfig& config);

} // namespace pmucal
