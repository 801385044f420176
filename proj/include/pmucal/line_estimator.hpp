#pragma once

#include <array>
#include <span>
#include <string>

#include "pmucal/numerics.hpp"
#include "pmucal/phasor.hpp"

namespace pmucal {

/// Result of the 3-phase line fit.
struct LineEstimate {
    LineParameters params;
    Eigen::Matrix3cd g_abc = Eigen::Matrix3cd::Zero(); ///< fitted G unknowns
    double residual_norm = 0.0;
    double condition_estimate = 0.0;
    /// ||G_fit - Z_fit*B_fit|| / ||G_fit||, Frobenius; the bilinear
    /// consistency is checked post-hoc, never enforced during the solve.
    double g_consistency = 0.0;
    std::size_t snapshots_used = 0;
};

struct SequenceParameters {
    Complex z1, z0;
    double b1 = 0.0, b0 = 0.0;
};

/// Labels of the 30 unknowns in packing order: the series-impedance block as
/// resistance/reactance pairs [R_a, X_a, ..., R_ac, X_ac], the G block as
/// real/imaginary pairs, then the six susceptances.
const std::array<std::string, 30>& line_unknown_labels();

/// Packs (Z, G, B) matrices into the 30-vector ordering used by the
/// regression columns.
Eigen::VectorXd pack_line_unknowns(const LineParameters& params, const Eigen::Matrix3cd& g_abc);

/// Inverse of pack_line_unknowns; symmetric matrices are filled from the six
/// unique entries each.
void unpack_line_unknowns(const Eigen::VectorXd& x, LineParameters* params,
                          Eigen::Matrix3cd* g_abc);

/// Builds the stacked regression: 12 real rows per snapshot (real/imaginary
/// parts of the three series-voltage-drop equations, then of the three
/// charging-current equations), 30 columns. All terms containing unknowns go
/// to the design matrix; all purely measured terms go to the right-hand side.
RegressionSystem assemble_line_regression(std::span<const MeasurementSnapshot> snapshots);

/// Bounded least-squares fit of all 30 unknowns. Bounds are the box
/// [min((1-f)r, (1+f)r), max((1-f)r, (1+f)r)] around each reference
/// component r; zero references get the symmetric band +/- f*s where s is
/// the mean magnitude of the same-kind nonzero references. G references are
/// the products Z_ref*B_ref.
LineEstimate estimate_line(std::span<const MeasurementSnapshot> snapshots,
                           const LineParameters& reference, double bound_fraction,
                           const SolverOptions& options = {});

/// Balanced-average sequence extraction: z1 = Zs - Zm, z0 = Zs + 2*Zm with
/// Zs the mean diagonal and Zm the mean off-diagonal entry; same formulas
/// for the susceptance matrix.
SequenceParameters extract_sequence(const LineParameters& params);

} // namespace pmucal
