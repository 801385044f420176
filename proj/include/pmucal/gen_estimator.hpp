#pragma once

#include <span>
#include <vector>

#include "pmucal/numerics.hpp"

namespace pmucal {

/// Reduced turbine-governor model parameters.
struct GeneratorParameters {
    double inertia_h = 0.0;      ///< inertia constant, seconds
    double turbine_t = 0.0;      ///< turbine-governor time constant, seconds
    double damping_kd = 0.0;     ///< damping coefficient, p.u.
    double regulation_kr = 0.0;  ///< speed regulation (droop), p.u.

    void validate() const; ///< inertia_h > 0, turbine_t > 0, regulation_kr != 0
};

/// Coefficients of the third-order difference model
///   y(k) = -a1*y(k-1) - a2*y(k-2) - a3*y(k-3) + b2*u(k-2) + b3*u(k-3) + e(k)
/// with y the frequency deviation and u the electrical-power deviation.
struct ArmaCoefficients {
    double a1 = 0.0, a2 = 0.0, a3 = 0.0;
    double b2 = 0.0, b3 = 0.0;
};

/// Paired frequency-deviation / electrical-power-deviation series sampled at
/// a fixed step. Both series are p.u. (synchronous-speed and machine base);
/// the units cancel in the difference model but must stay consistent.
struct GenTimeSeries {
    double step_h = 0.0; ///< sampling period, seconds
    std::vector<double> w_delta;
    std::vector<double> pe_delta;

    void validate() const; ///< equal lengths >= 10, step_h > 0
    std::size_t size() const { return w_delta.size(); }
};

/// Closed-form coefficients of the discretized closed loop. a1 is always -2.
ArmaCoefficients arma_from_params(const GeneratorParameters& params, double step_h);

/// Regression whose ordinary least-squares solution is (a1, a2, a3, b2, b3):
/// regressors (-y(k-1), -y(k-2), -y(k-3), u(k-2), u(k-3)) against target
/// y(k), one row per k from the fourth sample on.
RegressionSystem assemble_arma_regression(const GenTimeSeries& series);

struct ArmaFit {
    ArmaCoefficients coefficients;
    double residual_variance = 0.0; ///< equation-error energy per row
    std::size_t rows_used = 0;
};

/// Ordinary least squares on the full regression.
ArmaFit identify_arma(const GenTimeSeries& series, const SolverOptions& options = {});

/// Fit restricted to the given regression rows (bootstrap resampling).
ArmaFit identify_arma_rows(const RegressionSystem& regression,
                           std::span<const std::size_t> row_indices,
                           const SolverOptions& options = {});

/// Inverts the coefficient map back to physical parameters. Throws
/// DegenerateCoefficients naming the vanished denominator.
GeneratorParameters params_from_arma(const ArmaCoefficients& coeffs, double step_h);

} // namespace pmucal
