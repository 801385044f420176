#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pmucal/errors.hpp"

namespace pmucal {

/// Standard-form regression: design * x ~ observations.
struct RegressionSystem {
    Eigen::MatrixXd design;       ///< m x n, finite
    Eigen::VectorXd observations; ///< length m
    std::vector<std::string> column_labels; ///< length n

    static RegressionSystem make(Eigen::MatrixXd design, Eigen::VectorXd observations);

    void validate() const;
    Eigen::Index rows() const { return design.rows(); }
    Eigen::Index cols() const { return design.cols(); }
};

/// Per-component box constraints; entries may be +/-infinity.
struct Bounds {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    static Bounds unbounded(Eigen::Index n);
    void validate(Eigen::Index n) const;
};

struct SolverOptions {
    /// Largest-to-smallest singular value ratio above which the system is
    /// declared rank deficient.
    double condition_threshold = 1e10;
    /// Relative KKT residual for the bounded solve.
    double kkt_tolerance = 1e-10;
    int max_active_set_iterations = 500;
};

struct LsSolution {
    Eigen::VectorXd x;
    double residual_norm = 0.0;
    double condition_estimate = 0.0;
    int iterations = 0; ///< active-set changes (bounded path only)
    std::vector<Eigen::Index> active_lower;
    std::vector<Eigen::Index> active_upper;
};

/// Minimum-norm residual solve of design * x = observations via orthogonal
/// factorization. Requires m >= n and full column rank up to the condition
/// threshold.
LsSolution solve_least_squares(const RegressionSystem& sys, const SolverOptions& options = {});

/// Bounded-variable least squares: minimizes 0.5*||H x - Z||^2 subject to
/// lb <= x <= ub with a primal active-set method. Exact at convergence;
/// returned components sit exactly on their bounds when active.
LsSolution solve_bounded_least_squares(const RegressionSystem& sys, const Bounds& bounds,
                                       const SolverOptions& options = {});

} // namespace pmucal
