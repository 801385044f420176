#include "pmucal/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pmucal {

namespace {

Eigen::JacobiSVD<Eigen::MatrixXd> checked_svd(const RegressionSystem& sys,
                                              const SolverOptions& options,
                                              double* condition_out) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.design,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double s_max = sv(0);
    const double s_min = sv(sv.size() - 1);
    const double condition = (s_min > 0.0) ? s_max / s_min
                                           : std::numeric_limits<double>::infinity();
    *condition_out = condition;
    if (!(condition < options.condition_threshold)) {
        throw RankDeficient("regression is rank deficient (condition estimate " +
                                std::to_string(condition) + ")",
                            condition);
    }
    return svd;
}

/// Least squares over the free columns with bound columns held fixed.
Eigen::VectorXd solve_free_subproblem(const Eigen::MatrixXd& design,
                                      const Eigen::VectorXd& observations,
                                      const Eigen::VectorXd& x,
                                      const std::vector<Eigen::Index>& free_set) {
    const Eigen::Index m = design.rows();
    Eigen::MatrixXd h_free(m, static_cast<Eigen::Index>(free_set.size()));
    for (Eigen::Index k = 0; k < h_free.cols(); ++k) {
        h_free.col(k) = design.col(free_set[static_cast<std::size_t>(k)]);
    }
    Eigen::VectorXd rhs = observations - design * x;
    for (Eigen::Index k = 0; k < h_free.cols(); ++k) {
        rhs += h_free.col(k) * x(free_set[static_cast<std::size_t>(k)]);
    }
    return h_free.householderQr().solve(rhs);
}

} // namespace

RegressionSystem RegressionSystem::make(Eigen::MatrixXd design, Eigen::VectorXd observations) {
    RegressionSystem sys;
    sys.design = std::move(design);
    sys.observations = std::move(observations);
    sys.column_labels.reserve(static_cast<std::size_t>(sys.design.cols()));
    for (Eigen::Index j = 0; j < sys.design.cols(); ++j) {
        sys.column_labels.push_back("x" + std::to_string(j));
    }
    sys.validate();
    return sys;
}

void RegressionSystem::validate() const {
    if (design.rows() < 1 || design.cols() < 1) {
        throw DimensionMismatch("regression requires at least one row and one column");
    }
    if (observations.size() != design.rows()) {
        throw DimensionMismatch("observation vector length does not match row count");
    }
    if (column_labels.size() != static_cast<std::size_t>(design.cols())) {
        throw DimensionMismatch("column label count does not match column count");
    }
    if (!design.allFinite() || !observations.allFinite()) {
        throw DimensionMismatch("regression entries must be finite");
    }
}

Bounds Bounds::unbounded(Eigen::Index n) {
    const double inf = std::numeric_limits<double>::infinity();
    Bounds b;
    b.lower = Eigen::VectorXd::Constant(n, -inf);
    b.upper = Eigen::VectorXd::Constant(n, inf);
    return b;
}

void Bounds::validate(Eigen::Index n) const {
    if (lower.size() != n || upper.size() != n) {
        throw DimensionMismatch("bound vectors must match the unknown count");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        if (std::isnan(lower(j)) || std::isnan(upper(j)) || lower(j) > upper(j)) {
            throw DimensionMismatch("bounds require lb <= ub per component");
        }
    }
}

LsSolution solve_least_squares(const RegressionSystem& sys, const SolverOptions& options) {
    sys.validate();
    if (sys.rows() < sys.cols()) {
        throw DimensionMismatch("least squares requires at least as many rows as unknowns");
    }
    LsSolution solution;
    const auto svd = checked_svd(sys, options, &solution.condition_estimate);
    solution.x = svd.solve(sys.observations);
    solution.residual_norm = (sys.design * solution.x - sys.observations).norm();
    return solution;
}

LsSolution solve_bounded_least_squares(const RegressionSystem& sys, const Bounds& bounds,
                                       const SolverOptions& options) {
    sys.validate();
    bounds.validate(sys.cols());
    if (sys.rows() < sys.cols()) {
        throw DimensionMismatch("least squares requires at least as many rows as unknowns");
    }

    const Eigen::MatrixXd& h = sys.design;
    const Eigen::VectorXd& z = sys.observations;
    const Eigen::Index n = sys.cols();

    LsSolution solution;
    const auto svd = checked_svd(sys, options, &solution.condition_estimate);

    // Start from the projection of the unconstrained optimum. state[j]:
    // -1 at lower bound, +1 at upper bound, 0 free.
    Eigen::VectorXd x = svd.solve(z);
    std::vector<int> state(static_cast<std::size_t>(n), 0);
    for (Eigen::Index j = 0; j < n; ++j) {
        if (x(j) <= bounds.lower(j)) {
            x(j) = bounds.lower(j);
            state[static_cast<std::size_t>(j)] = -1;
        } else if (x(j) >= bounds.upper(j)) {
            x(j) = bounds.upper(j);
            state[static_cast<std::size_t>(j)] = +1;
        }
    }

    const double kkt_scale = std::max(1.0, (h.transpose() * z).cwiseAbs().maxCoeff());
    const double kkt_tol = options.kkt_tolerance * kkt_scale;

    int iterations = 0;
    while (iterations++ < options.max_active_set_iterations) {
        std::vector<Eigen::Index> free_set;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (state[static_cast<std::size_t>(j)] == 0) {
                free_set.push_back(j);
            }
        }

        if (!free_set.empty()) {
            const Eigen::VectorXd x_free = solve_free_subproblem(h, z, x, free_set);

            // Step toward the subproblem optimum until a bound blocks.
            double alpha = 1.0;
            Eigen::Index blocker = -1;
            int blocker_side = 0;
            for (std::size_t k = 0; k < free_set.size(); ++k) {
                const Eigen::Index j = free_set[k];
                const double step = x_free(static_cast<Eigen::Index>(k)) - x(j);
                if (step > 0.0 && std::isfinite(bounds.upper(j))) {
                    const double a = (bounds.upper(j) - x(j)) / step;
                    if (a < alpha) {
                        alpha = a;
                        blocker = j;
                        blocker_side = +1;
                    }
                } else if (step < 0.0 && std::isfinite(bounds.lower(j))) {
                    const double a = (bounds.lower(j) - x(j)) / step;
                    if (a < alpha) {
                        alpha = a;
                        blocker = j;
                        blocker_side = -1;
                    }
                }
            }

            if (blocker >= 0) {
                for (std::size_t k = 0; k < free_set.size(); ++k) {
                    const Eigen::Index j = free_set[k];
                    x(j) += alpha * (x_free(static_cast<Eigen::Index>(k)) - x(j));
                }
                x(blocker) = (blocker_side > 0) ? bounds.upper(blocker) : bounds.lower(blocker);
                state[static_cast<std::size_t>(blocker)] = blocker_side;
                continue;
            }
            for (std::size_t k = 0; k < free_set.size(); ++k) {
                x(free_set[k]) = x_free(static_cast<Eigen::Index>(k));
            }
        }

        // Free variables sit at the working-set optimum; test Lagrange signs
        // at the active bounds and release the worst violator.
        const Eigen::VectorXd gradient = h.transpose() * (h * x - z);
        double worst = kkt_tol;
        Eigen::Index worst_j = -1;
        for (Eigen::Index j = 0; j < n; ++j) {
            const int s = state[static_cast<std::size_t>(j)];
            if (s == 0 || bounds.lower(j) == bounds.upper(j)) {
                continue;
            }
            const double violation = (s < 0) ? -gradient(j) : gradient(j);
            if (violation > worst) {
                worst = violation;
                worst_j = j;
            }
        }
        if (worst_j < 0) {
            solution.x = x;
            solution.residual_norm = (h * x - z).norm();
            solution.iterations = iterations;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (state[static_cast<std::size_t>(j)] < 0) {
                    solution.active_lower.push_back(j);
                } else if (state[static_cast<std::size_t>(j)] > 0) {
                    solution.active_upper.push_back(j);
                }
            }
            return solution;
        }
        state[static_cast<std::size_t>(worst_j)] = 0;
    }

    throw NoConvergence("bounded least squares did not converge within the iteration cap");
}

} // namespace pmucal
