#include "pmucal/gen_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pmucal {

namespace {

const std::vector<std::string> kArmaLabels = {"a1", "a2", "a3", "b2", "b3"};

ArmaCoefficients coefficients_from_solution(const Eigen::VectorXd& x) {
    // The regressors already carry the sign flips, so the solution vector is
    // (a1, a2, a3, b2, b3) directly.
    ArmaCoefficients c;
    c.a1 = x(0);
    c.a2 = x(1);
    c.a3 = x(2);
    c.b2 = x(3);
    c.b3 = x(4);
    return c;
}

} // namespace

void GeneratorParameters::validate() const {
    if (!std::isfinite(inertia_h) || !std::isfinite(turbine_t) || !std::isfinite(damping_kd) ||
        !std::isfinite(regulation_kr)) {
        throw Error("generator parameters must be finite");
    }
    if (inertia_h <= 0.0) {
        throw Error("inertia constant must be positive");
    }
    if (turbine_t <= 0.0) {
        throw Error("turbine time constant must be positive");
    }
    if (regulation_kr == 0.0) {
        throw Error("speed regulation constant must be nonzero");
    }
}

void GenTimeSeries::validate() const {
    if (step_h <= 0.0 || !std::isfinite(step_h)) {
        throw Error("sampling period must be positive and finite");
    }
    if (w_delta.size() != pe_delta.size()) {
        throw DimensionMismatch("frequency and power series must have equal lengths");
    }
    if (w_delta.size() < 10) {
        throw TooShortSeries("time series needs at least 10 samples");
    }
    for (std::size_t k = 0; k < w_delta.size(); ++k) {
        if (!std::isfinite(w_delta[k]) || !std::isfinite(pe_delta[k])) {
            throw Error("time series values must be finite");
        }
    }
}

ArmaCoefficients arma_from_params(const GeneratorParameters& params, double step_h) {
    params.validate();
    if (step_h <= 0.0 || !std::isfinite(step_h)) {
        throw Error("sampling period must be positive and finite");
    }
    const double h = step_h;
    const double two_ht = 2.0 * params.inertia_h * params.turbine_t;

    ArmaCoefficients c;
    c.a1 = -2.0;
    c.a2 = (two_ht + 2.0 * params.inertia_h * h + params.turbine_t * h * params.damping_kd +
            h * h * params.damping_kd + h * h / params.regulation_kr) /
           two_ht;
    c.a3 = -h * (2.0 * params.inertia_h + params.turbine_t * params.damping_kd) / two_ht;
    c.b2 = -(h * h + params.turbine_t * h) / two_ht;
    c.b3 = h / (2.0 * params.inertia_h);
    return c;
}

RegressionSystem assemble_arma_regression(const GenTimeSeries& series) {
    series.validate();
    const std::size_t n = series.size();
    const Eigen::Index rows = static_cast<Eigen::Index>(n - 3);

    Eigen::MatrixXd h(rows, 5);
    Eigen::VectorXd z(rows);
    for (std::size_t k = 3; k < n; ++k) {
        const Eigen::Index row = static_cast<Eigen::Index>(k - 3);
        h(row, 0) = -series.w_delta[k - 1];
        h(row, 1) = -series.w_delta[k - 2];
        h(row, 2) = -series.w_delta[k - 3];
        h(row, 3) = series.pe_delta[k - 2];
        h(row, 4) = series.pe_delta[k - 3];
        z(row) = series.w_delta[k];
    }

    RegressionSystem sys;
    sys.design = std::move(h);
    sys.observations = std::move(z);
    sys.column_labels = kArmaLabels;
    sys.validate();
    return sys;
}

ArmaFit identify_arma(const GenTimeSeries& series, const SolverOptions& options) {
    const RegressionSystem sys = assemble_arma_regression(series);
    const LsSolution solution = solve_least_squares(sys, options);

    ArmaFit fit;
    fit.coefficients = coefficients_from_solution(solution.x);
    fit.rows_used = static_cast<std::size_t>(sys.rows());
    const double dof = static_cast<double>(sys.rows() - sys.cols());
    fit.residual_variance =
        (dof > 0.0) ? solution.residual_norm * solution.residual_norm / dof : 0.0;
    return fit;
}

ArmaFit identify_arma_rows(const RegressionSystem& regression,
                           std::span<const std::size_t> row_indices,
                           const SolverOptions& options) {
    if (row_indices.size() < 5) {
        throw TooShortSeries("row resample needs at least 5 rows");
    }
    RegressionSystem sub;
    sub.design.resize(static_cast<Eigen::Index>(row_indices.size()), regression.cols());
    sub.observations.resize(static_cast<Eigen::Index>(row_indices.size()));
    for (std::size_t i = 0; i < row_indices.size(); ++i) {
        if (row_indices[i] >= static_cast<std::size_t>(regression.rows())) {
            throw DimensionMismatch("resampled row index out of range");
        }
        sub.design.row(static_cast<Eigen::Index>(i)) =
            regression.design.row(static_cast<Eigen::Index>(row_indices[i]));
        sub.observations(static_cast<Eigen::Index>(i)) =
            regression.observations(static_cast<Eigen::Index>(row_indices[i]));
    }
    sub.column_labels = regression.column_labels;

    const LsSolution solution = solve_least_squares(sub, options);
    ArmaFit fit;
    fit.coefficients = coefficients_from_solution(solution.x);
    fit.rows_used = row_indices.size();
    const double dof = static_cast<double>(sub.rows() - sub.cols());
    fit.residual_variance =
        (dof > 0.0) ? solution.residual_norm * solution.residual_norm / dof : 0.0;
    return fit;
}

GeneratorParameters params_from_arma(const ArmaCoefficients& coeffs, double step_h) {
    if (step_h <= 0.0 || !std::isfinite(step_h)) {
        throw Error("sampling period must be positive and finite");
    }
    const double scale = std::max({std::abs(coeffs.a1), std::abs(coeffs.a2), std::abs(coeffs.a3),
                                   std::abs(coeffs.b2), std::abs(coeffs.b3), 1.0});
    const double tiny = 1e-14 * scale;

    const double b_sum = coeffs.b2 + coeffs.b3;
    if (std::abs(coeffs.b3) < tiny) {
        throw DegenerateCoefficients("b3 vanished: inertia constant unidentifiable");
    }
    if (std::abs(b_sum) < tiny) {
        throw DegenerateCoefficients("b2 + b3 vanished: turbine time constant unidentifiable");
    }

    GeneratorParameters p;
    p.turbine_t = -coeffs.b3 / b_sum * step_h;
    p.inertia_h = step_h / (2.0 * coeffs.b3);
    p.damping_kd = (b_sum - coeffs.a3 * coeffs.b3) / (coeffs.b3 * coeffs.b3);

    const double kr_num = coeffs.b3 * coeffs.b3 * b_sum;
    const double kr_den_left = coeffs.b3 * coeffs.b3 * (-coeffs.a2 - coeffs.a3 + 1.0);
    const double kr_den_right = b_sum * (b_sum - coeffs.a3 * coeffs.b3);
    const double kr_den = kr_den_left - kr_den_right;
    const double kr_den_scale = std::max(std::abs(kr_den_left) + std::abs(kr_den_right), tiny);
    if (std::abs(kr_den) < 1e-14 * kr_den_scale) {
        throw DegenerateCoefficients(
            "speed-regulation denominator vanished: droop unidentifiable");
    }
    p.regulation_kr = kr_num / kr_den;

    try {
        p.validate();
    } catch (const Error& e) {
        throw DegenerateCoefficients(std::string("recovered parameters are unphysical: ") +
                                     e.what());
    }
    return p;
}

} // namespace pmucal
