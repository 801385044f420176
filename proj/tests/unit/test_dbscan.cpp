#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "pmucal/dbscan.hpp"

using namespace pmucal;

namespace {

/// Brute-force oracle: epsilon-neighborhood graph, core set by counting,
/// connected components over cores, border points attached to the cluster of
/// their smallest-index core neighbor.
struct OracleResult {
    std::vector<int> component_of; // -1 outlier, else component key
    std::vector<PointRole> roles;
};

OracleResult oracle(const std::vector<Eigen::VectorXd>& points, const DbscanConfig& config) {
    const std::size_t n = points.size();
    std::vector<std::vector<bool>> adjacent(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            adjacent[i][j] = (points[i] - points[j]).norm() <= config.eps;
        }
    }
    std::vector<bool> core(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t count = 0;
        for (std::size_t j = 0; j < n; ++j) {
            count += adjacent[i][j] ? 1 : 0;
        }
        core[i] = count >= config.min_pts;
    }

    OracleResult result;
    result.component_of.assign(n, -1);
    result.roles.assign(n, PointRole::Outlier);

    // Components over cores via repeated closure.
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!core[i] || result.component_of[i] >= 0) {
            continue;
        }
        const int id = next++;
        std::vector<std::size_t> stack{i};
        result.component_of[i] = id;
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            result.roles[p] = PointRole::Core;
            for (std::size_t q = 0; q < n; ++q) {
                if (core[q] && adjacent[p][q] && result.component_of[q] < 0) {
                    result.component_of[q] = id;
                    stack.push_back(q);
                }
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (core[i]) {
            continue;
        }
        for (std::size_t q = 0; q < n; ++q) {
            if (core[q] && adjacent[i][q]) {
                result.component_of[i] = result.component_of[q];
                result.roles[i] = PointRole::Reachable;
                break;
            }
        }
    }
    return result;
}

std::vector<Eigen::VectorXd> wrap(const std::vector<double>& values) {
    std::vector<Eigen::VectorXd> points;
    for (double v : values) {
        points.push_back(Eigen::VectorXd::Constant(1, v));
    }
    return points;
}

/// Partition comparison that ignores cluster numbering.
bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) {
        return false;
    }
    std::map<int, int> fwd, bwd;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if ((a[i] < 0) != (b[i] < 0)) {
            return false;
        }
        if (a[i] < 0) {
            continue;
        }
        if (auto it = fwd.find(a[i]); it != fwd.end()) {
            if (it->second != b[i]) {
                return false;
            }
        } else {
            fwd[a[i]] = b[i];
        }
        if (auto it = bwd.find(b[i]); it != bwd.end()) {
            if (it->second != a[i]) {
                return false;
            }
        } else {
            bwd[b[i]] = a[i];
        }
    }
    return true;
}

} // namespace

TEST_SUITE("dbscan") {

TEST_CASE("identical points form a single cluster") {
    const std::vector<double> values(6, 1.5);
    const Clustering clustering = cluster_dbscan(std::span(values), DbscanConfig{0.1, 4});
    CHECK(clustering.cluster_count == 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
        CHECK(clustering.labels[i] == 0);
        CHECK(clustering.roles[i] == PointRole::Core);
    }
}

TEST_CASE("a lone point below min_pts is an outlier") {
    const std::vector<double> values{0.0};
    const Clustering clustering = cluster_dbscan(std::span(values), DbscanConfig{0.5, 2});
    CHECK(clustering.labels[0] == kOutlier);
    CHECK(clustering.roles[0] == PointRole::Outlier);
}

TEST_CASE("tight scalar cluster separates from a distant point") {
    const std::vector<double> values{0.0, 0.001, 0.002, 0.5};
    const Clustering clustering = cluster_dbscan(std::span(values), DbscanConfig{0.01, 2});
    CHECK(clustering.cluster_count == 1);
    CHECK(clustering.labels[0] == 0);
    CHECK(clustering.labels[1] == 0);
    CHECK(clustering.labels[2] == 0);
    CHECK(clustering.labels[3] == kOutlier);

    const OracleResult expected = oracle(wrap(values), DbscanConfig{0.01, 2});
    CHECK(same_partition(clustering.labels, expected.component_of));
}

TEST_CASE("matches the brute-force oracle on random instances") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> n_dist(1, 50);
    std::uniform_int_distribution<int> d_dist(1, 3);
    std::uniform_int_distribution<std::size_t> min_pts_dist(1, 6);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    std::uniform_real_distribution<double> eps_dist(0.05, 0.8);

    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = n_dist(rng);
        const int d = d_dist(rng);
        std::vector<Eigen::VectorXd> points;
        for (std::size_t i = 0; i < n; ++i) {
            Eigen::VectorXd p(d);
            for (int k = 0; k < d; ++k) {
                p(k) = coord(rng);
            }
            points.push_back(p);
        }
        const DbscanConfig config{eps_dist(rng), min_pts_dist(rng)};
        const Clustering clustering = cluster_dbscan(points, config);
        const OracleResult expected = oracle(points, config);
        CHECK(same_partition(clustering.labels, expected.component_of));
        CHECK(clustering.roles == expected.roles);
    }
}

TEST_CASE("membership sets and roles are invariant under input permutation") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    std::vector<Eigen::VectorXd> points;
    for (int i = 0; i < 30; ++i) {
        Eigen::VectorXd p(2);
        p << coord(rng), coord(rng);
        points.push_back(p);
    }
    const DbscanConfig config{0.4, 3};
    const Clustering original = cluster_dbscan(points, config);

    std::vector<std::size_t> perm(points.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Eigen::VectorXd> shuffled;
    for (std::size_t i : perm) {
        shuffled.push_back(points[i]);
    }
    const Clustering permuted = cluster_dbscan(shuffled, config);

    std::vector<int> mapped(points.size());
    std::vector<PointRole> mapped_roles(points.size());
    for (std::size_t k = 0; k < perm.size(); ++k) {
        mapped[perm[k]] = permuted.labels[k];
        mapped_roles[perm[k]] = permuted.roles[k];
    }
    CHECK(same_partition(original.labels, mapped));
    CHECK(original.roles == mapped_roles);
}

TEST_CASE("border points attach to the smallest-index claiming core") {
    // Two four-point cores with a border point exactly eps away from one
    // core of each; the cluster listed first in the input claims it.
    const std::vector<double> values{0.75, 0.8, 0.85, 0.9, 0.0, 0.05, 0.1, 0.15, 0.45};
    const Clustering clustering = cluster_dbscan(std::span(values), DbscanConfig{0.3, 4});
    CHECK(clustering.cluster_count == 2);
    CHECK(clustering.roles[8] == PointRole::Reachable);
    CHECK(clustering.labels[8] == clustering.labels[0]);
}

TEST_CASE("empty input is rejected") {
    const std::vector<double> values;
    CHECK_THROWS_AS(cluster_dbscan(std::span(values), DbscanConfig{0.1, 1}), EmptyInput);
}

} // TEST_SUITE
