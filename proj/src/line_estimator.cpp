#include "pmucal/line_estimator.hpp"

#include <cmath>
#include <complex>

namespace pmucal {

namespace {

constexpr Complex kHalfJ{0.0, 0.5};

// Unique-entry index of the symmetric 3x3 matrices in packing order
// [aa, bb, cc, ab, bc, ac].
constexpr int kSymIndex[3][3] = {
    {0, 3, 5},
    {3, 1, 4},
    {5, 4, 2},
};

constexpr const char* kEntryNames[6] = {"a", "b", "c", "ab", "bc", "ac"};

std::array<Complex, 3> to_complex(const ThreePhaseSet& set) {
    return {set.a.to_complex(), set.b.to_complex(), set.c.to_complex()};
}

/// Writes the two real rows of one complex coefficient acting on a complex
/// unknown stored as (real, imaginary) column pair.
void add_complex_unknown(Eigen::MatrixXd& h, Eigen::Index row_re, Eigen::Index col_re,
                         Complex coeff) {
    h(row_re, col_re) += coeff.real();
    h(row_re, col_re + 1) += -coeff.imag();
    h(row_re + 1, col_re) += coeff.imag();
    h(row_re + 1, col_re + 1) += coeff.real();
}

/// Same for a real unknown with a complex coefficient.
void add_real_unknown(Eigen::MatrixXd& h, Eigen::Index row_re, Eigen::Index col,
                      Complex coeff) {
    h(row_re, col) += coeff.real();
    h(row_re + 1, col) += coeff.imag();
}

/// Indices into the packed vector of the groups used for zero-reference
/// bound widths: same-kind components share a scale.
const std::vector<std::vector<Eigen::Index>>& bound_groups() {
    static const std::vector<std::vector<Eigen::Index>> groups = {
        {0, 2, 4, 6, 8, 10},    // resistances
        {1, 3, 5, 7, 9, 11},    // reactances
        {12, 14, 16, 18, 20, 22}, // Re G
        {13, 15, 17, 19, 21, 23}, // Im G
        {24, 25, 26, 27, 28, 29}, // susceptances
    };
    return groups;
}

} // namespace

const std::array<std::string, 30>& line_unknown_labels() {
    static const std::array<std::string, 30> labels = [] {
        std::array<std::string, 30> out;
        for (int k = 0; k < 6; ++k) {
            out[static_cast<std::size_t>(2 * k)] = std::string("R_") + kEntryNames[k];
            out[static_cast<std::size_t>(2 * k + 1)] = std::string("X_") + kEntryNames[k];
            out[static_cast<std::size_t>(12 + 2 * k)] = std::string("G_") + kEntryNames[k] + "_re";
            out[static_cast<std::size_t>(12 + 2 * k + 1)] = std::string("G_") + kEntryNames[k] + "_im";
            out[static_cast<std::size_t>(24 + k)] = std::string("B_") + kEntryNames[k];
        }
        return out;
    }();
    return labels;
}

Eigen::VectorXd pack_line_unknowns(const LineParameters& params, const Eigen::Matrix3cd& g_abc) {
    Eigen::VectorXd x(30);
    const std::pair<int, int> unique_entries[6] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {1, 2}, {0, 2}};
    for (int k = 0; k < 6; ++k) {
        const auto [i, j] = unique_entries[k];
        x(2 * k) = params.z_abc(i, j).real();
        x(2 * k + 1) = params.z_abc(i, j).imag();
        x(12 + 2 * k) = g_abc(i, j).real();
        x(12 + 2 * k + 1) = g_abc(i, j).imag();
        x(24 + k) = params.b_abc(i, j);
    }
    return x;
}

void unpack_line_unknowns(const Eigen::VectorXd& x, LineParameters* params,
                          Eigen::Matrix3cd* g_abc) {
    if (x.size() != 30) {
        throw DimensionMismatch("packed line unknowns must have 30 components");
    }
    const std::pair<int, int> unique_entries[6] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {1, 2}, {0, 2}};
    for (int k = 0; k < 6; ++k) {
        const auto [i, j] = unique_entries[k];
        if (params != nullptr) {
            params->z_abc(i, j) = params->z_abc(j, i) = Complex(x(2 * k), x(2 * k + 1));
            params->b_abc(i, j) = params->b_abc(j, i) = x(24 + k);
        }
        if (g_abc != nullptr) {
            (*g_abc)(i, j) = (*g_abc)(j, i) = Complex(x(12 + 2 * k), x(12 + 2 * k + 1));
        }
    }
}

RegressionSystem assemble_line_regression(std::span<const MeasurementSnapshot> snapshots) {
    if (snapshots.empty()) {
        throw TooFewSnapshots("line regression needs at least one snapshot");
    }
    const Eigen::Index rows = 12 * static_cast<Eigen::Index>(snapshots.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(rows, 30);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(rows);

    Eigen::Index row = 0;
    for (const MeasurementSnapshot& snap : snapshots) {
        const auto vs = to_complex(snap.v_s);
        const auto vr = to_complex(snap.v_r);
        const auto is = to_complex(snap.i_s);
        const auto ir = to_complex(snap.i_r);

        // Series voltage-drop equations, one per phase:
        //   sum_q Z(p,q) I_q^S - j/2 * sum_q G(p,q) V_q^S = V_p^S - V_p^R
        for (int p = 0; p < 3; ++p, row += 2) {
            for (int q = 0; q < 3; ++q) {
                const int k = kSymIndex[p][q];
                add_complex_unknown(h, row, 2 * k, is[static_cast<std::size_t>(q)]);
                add_complex_unknown(h, row, 12 + 2 * k,
                                    -kHalfJ * vs[static_cast<std::size_t>(q)]);
            }
            const Complex rhs = vs[static_cast<std::size_t>(p)] - vr[static_cast<std::size_t>(p)];
            z(row) = rhs.real();
            z(row + 1) = rhs.imag();
        }

        // Charging-current equations, one per phase; the measured current sum
        // moves to the right-hand side:
        //   -j * sum_q B(p,q) (V_q^S + V_q^R) = -2 (I_p^S + I_p^R)
        for (int p = 0; p < 3; ++p, row += 2) {
            for (int q = 0; q < 3; ++q) {
                const int k = kSymIndex[p][q];
                const Complex v_sum =
                    vs[static_cast<std::size_t>(q)] + vr[static_cast<std::size_t>(q)];
                add_real_unknown(h, row, 24 + k, Complex(0.0, -1.0) * v_sum);
            }
            const Complex rhs =
                -2.0 * (is[static_cast<std::size_t>(p)] + ir[static_cast<std::size_t>(p)]);
            z(row) = rhs.real();
            z(row + 1) = rhs.imag();
        }
    }

    RegressionSystem sys;
    sys.design = std::move(h);
    sys.observations = std::move(z);
    sys.column_labels.assign(line_unknown_labels().begin(), line_unknown_labels().end());
    sys.validate();
    return sys;
}

LineEstimate estimate_line(std::span<const MeasurementSnapshot> snapshots,
                           const LineParameters& reference, double bound_fraction,
                           const SolverOptions& options) {
    if (bound_fraction <= 0.0 || !std::isfinite(bound_fraction)) {
        throw Error("bound fraction must be positive and finite");
    }
    if (snapshots.size() < 3) {
        throw TooFewSnapshots("line estimation needs at least 3 snapshots (30 unknowns, "
                              "12 rows per snapshot)");
    }
    reference.validate();
    RegressionSystem sys = assemble_line_regression(snapshots);

    // Reference for the G block is the product of the reference matrices,
    // symmetrized in case the caller's matrices do not commute.
    Eigen::Matrix3cd g_ref = reference.z_abc * reference.b_abc.cast<Complex>();
    g_ref = 0.5 * (g_ref + g_ref.transpose()).eval();
    const Eigen::VectorXd ref = pack_line_unknowns(reference, g_ref);

    Bounds bounds;
    bounds.lower.resize(30);
    bounds.upper.resize(30);
    for (Eigen::Index j = 0; j < 30; ++j) {
        const double r = ref(j);
        if (r != 0.0) {
            bounds.lower(j) = std::min((1.0 - bound_fraction) * r, (1.0 + bound_fraction) * r);
            bounds.upper(j) = std::max((1.0 - bound_fraction) * r, (1.0 + bound_fraction) * r);
        }
    }
    for (const auto& group : bound_groups()) {
        double sum = 0.0;
        int nonzero = 0;
        for (Eigen::Index j : group) {
            if (ref(j) != 0.0) {
                sum += std::abs(ref(j));
                ++nonzero;
            }
        }
        double scale;
        if (nonzero > 0) {
            scale = sum / nonzero;
        } else {
            // Whole kind unreferenced: fall back to the mean magnitude of all
            // nonzero references, then to 1 p.u.
            double all_sum = 0.0;
            int all_nonzero = 0;
            for (Eigen::Index j = 0; j < 30; ++j) {
                if (ref(j) != 0.0) {
                    all_sum += std::abs(ref(j));
                    ++all_nonzero;
                }
            }
            scale = (all_nonzero > 0) ? all_sum / all_nonzero : 1.0;
        }
        for (Eigen::Index j : group) {
            if (ref(j) == 0.0) {
                bounds.lower(j) = -bound_fraction * scale;
                bounds.upper(j) = bound_fraction * scale;
            }
        }
    }

    const LsSolution solution = solve_bounded_least_squares(sys, bounds, options);

    LineEstimate estimate;
    unpack_line_unknowns(solution.x, &estimate.params, &estimate.g_abc);
    estimate.residual_norm = solution.residual_norm;
    estimate.condition_estimate = solution.condition_estimate;
    estimate.snapshots_used = snapshots.size();

    const Eigen::Matrix3cd g_implied =
        estimate.params.z_abc * estimate.params.b_abc.cast<Complex>();
    const double g_norm = estimate.g_abc.norm();
    estimate.g_consistency =
        (g_norm > 0.0) ? (estimate.g_abc - g_implied).norm() / g_norm : 0.0;
    return estimate;
}

SequenceParameters extract_sequence(const LineParameters& params) {
    const Complex zs = (params.z_abc(0, 0) + params.z_abc(1, 1) + params.z_abc(2, 2)) / 3.0;
    const Complex zm = (params.z_abc(0, 1) + params.z_abc(1, 2) + params.z_abc(0, 2)) / 3.0;
    const double bs = (params.b_abc(0, 0) + params.b_abc(1, 1) + params.b_abc(2, 2)) / 3.0;
    const double bm = (params.b_abc(0, 1) + params.b_abc(1, 2) + params.b_abc(0, 2)) / 3.0;

    SequenceParameters seq;
    seq.z1 = zs - zm;
    seq.z0 = zs + 2.0 * zm;
    seq.b1 = bs - bm;
    seq.b0 = bs + 2.0 * bm;
    return seq;
}

} // namespace pmucal
