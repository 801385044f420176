#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pmucal/line_estimator.hpp"
#include "pmucal/simulator.hpp"
#include "test_helpers.hpp"

using namespace pmucal;

namespace {

constexpr double kPi = std::numbers::pi;

LineScenarioOptions rich_scenario() {
    // b0 != b1 and z0 = 3*z1 keep all 30 unknowns nonzero so relative errors
    // are well defined.
    LineScenarioOptions options;
    options.snapshots = 10;
    options.z1 = Complex(0.01, 0.10);
    options.z0 = Complex(0.03, 0.30);
    options.b1 = 0.20;
    options.b0 = 0.12;
    options.unbalance = 0.02;
    options.seed = 71;
    return options;
}

MeasurementSnapshot zero_snapshot(std::int64_t timestamp_us) {
    MeasurementSnapshot snap;
    snap.timestamp_us = timestamp_us;
    return snap;
}

/// Sequence-transform diagonalization: T * Z * T^-1 of a perfectly
/// transposed matrix is diagonal; its (1,1) entry is z1.
Complex z1_via_transform(const Eigen::Matrix3cd& z_abc) {
    const Complex a = std::polar(1.0, 2.0 * kPi / 3.0);
    const Complex a2 = std::polar(1.0, -2.0 * kPi / 3.0);
    Eigen::Matrix3cd t;
    t << 1.0, 1.0, 1.0,
         1.0, a, a2,
         1.0, a2, a;
    t /= 3.0;
    Eigen::Matrix3cd t_inv;
    t_inv << 1.0, 1.0, 1.0,
             1.0, a2, a,
             1.0, a, a2;
    const Eigen::Matrix3cd diag = t * z_abc * t_inv;
    return diag(1, 1);
}

} // namespace

TEST_SUITE("line_estimator") {

TEST_CASE("one snapshot yields a 12 x 30 regression") {
    const auto snapshots = testing::make_snapshots(rich_scenario());
    const RegressionSystem sys =
        assemble_line_regression(std::span(snapshots.data(), 1));
    CHECK(sys.rows() == 12);
    CHECK(sys.cols() == 30);
    CHECK(sys.column_labels.size() == 30);
    CHECK(sys.column_labels[0] == "R_a");
    CHECK(sys.column_labels[24] == "B_a");
}

TEST_CASE("all-zero snapshots produce a zero right-hand side and zero current columns") {
    std::vector<MeasurementSnapshot> zeros{zero_snapshot(0), zero_snapshot(1), zero_snapshot(2)};
    const RegressionSystem sys = assemble_line_regression(zeros);
    CHECK(sys.observations.isZero(0.0));
    CHECK(sys.design.leftCols(12).isZero(0.0));
}

TEST_CASE("truth snapshots satisfy the regression with the packed true unknowns") {
    const LineScenarioOptions options = rich_scenario();
    const LineSimulation sim = simulate_line(make_line_scenario(options));
    const RegressionSystem sys = assemble_line_regression(sim.truth);

    const LineParameters truth = LineParameters::balanced(options.z1, options.z0,
                                                          options.b1, options.b0);
    const Eigen::Matrix3cd g_true = truth.z_abc * truth.b_abc.cast<Complex>();
    const Eigen::VectorXd x_true = pack_line_unknowns(truth, g_true);
    CHECK((sys.design * x_true - sys.observations).norm() < 1e-10);
}

TEST_CASE("noiseless snapshots recover every unknown to 1e-6 relative") {
    const LineScenarioOptions options = rich_scenario();
    const auto snapshots = testing::make_snapshots(options);
    const LineParameters truth = LineParameters::balanced(options.z1, options.z0,
                                                          options.b1, options.b0);

    const LineEstimate estimate = estimate_line(snapshots, truth, 0.30);
    const Eigen::Matrix3cd g_true = truth.z_abc * truth.b_abc.cast<Complex>();
    const Eigen::VectorXd x_true = pack_line_unknowns(truth, g_true);
    const Eigen::VectorXd x_fit = pack_line_unknowns(estimate.params, estimate.g_abc);
    for (Eigen::Index j = 0; j < 30; ++j) {
        REQUIRE(x_true(j) != 0.0);
        CHECK(std::abs(x_fit(j) - x_true(j)) / std::abs(x_true(j)) < 1e-6);
    }
    CHECK(estimate.residual_norm < 1e-9);
    CHECK(estimate.g_consistency < 1e-6);
    CHECK(estimate.snapshots_used == options.snapshots);
}

TEST_CASE("estimate is invariant under snapshot reordering") {
    const LineScenarioOptions options = rich_scenario();
    auto snapshots = testing::make_snapshots(options);
    const LineParameters truth = LineParameters::balanced(options.z1, options.z0,
                                                          options.b1, options.b0);
    const LineEstimate original = estimate_line(snapshots, truth, 0.30);

    std::mt19937_64 rng(5);
    std::shuffle(snapshots.begin(), snapshots.end(), rng);
    const LineEstimate shuffled = estimate_line(snapshots, truth, 0.30);

    const Eigen::VectorXd a = pack_line_unknowns(original.params, original.g_abc);
    const Eigen::VectorXd b = pack_line_unknowns(shuffled.params, shuffled.g_abc);
    CHECK((a - b).norm() < 1e-9);
}

TEST_CASE("noise strictly increases the residual norm") {
    LineScenarioOptions options = rich_scenario();
    const LineParameters truth = LineParameters::balanced(options.z1, options.z0,
                                                          options.b1, options.b0);
    const LineEstimate clean = estimate_line(testing::make_snapshots(options), truth, 0.30);

    options.noise = GaussianNoise{1e-3, 1e-3};
    const LineEstimate noisy = estimate_line(testing::make_snapshots(options), truth, 0.30);
    CHECK(clean.residual_norm < 1e-9);
    CHECK(noisy.residual_norm > 100.0 * clean.residual_norm);
}

TEST_CASE("identical snapshots are rank deficient") {
    const auto snapshots = testing::make_snapshots(rich_scenario());
    std::vector<MeasurementSnapshot> copies(5, snapshots.front());
    for (std::size_t k = 0; k < copies.size(); ++k) {
        copies[k].timestamp_us = static_cast<std::int64_t>(k);
    }
    const LineParameters truth = LineParameters::balanced(Complex(0.01, 0.10),
                                                          Complex(0.03, 0.30), 0.20, 0.12);
    CHECK_THROWS_AS(estimate_line(copies, truth, 0.30), RankDeficient);
}

TEST_CASE("fewer than three snapshots cannot be estimated") {
    const auto snapshots = testing::make_snapshots(rich_scenario());
    const LineParameters truth = LineParameters::balanced(Complex(0.01, 0.10),
                                                          Complex(0.03, 0.30), 0.20, 0.12);
    CHECK_THROWS_AS(estimate_line(std::span(snapshots.data(), 2), truth, 0.30),
                    TooFewSnapshots);
}

TEST_CASE("a reference 50% off pins the series-resistance block to the box boundary") {
    const LineScenarioOptions options = rich_scenario();
    const auto snapshots = testing::make_snapshots(options);
    const LineParameters truth = LineParameters::balanced(options.z1, options.z0,
                                                          options.b1, options.b0);

    // Reference resistances deliberately 50% low: truth = 1.5 * ref lies
    // outside the +/-30% box.
    LineParameters reference = truth;
    reference.z_abc = (truth.z_abc.real() / 1.5).cast<Complex>() +
                      Complex(0.0, 1.0) * truth.z_abc.imag().cast<Complex>();

    const LineEstimate estimate = estimate_line(snapshots, reference, 0.30);
    const Eigen::Matrix3cd g_ref_m = reference.z_abc * reference.b_abc.cast<Complex>();
    const Eigen::VectorXd ref = pack_line_unknowns(reference, g_ref_m);
    const Eigen::VectorXd fit = pack_line_unknowns(estimate.params, estimate.g_abc);

    // The three diagonal resistances sit exactly on their upper bounds; the
    // mutual terms may trade off inside the box but never leave it.
    for (int k = 0; k < 3; ++k) {
        const Eigen::Index j = 2 * k;
        const double ub = std::max((1.0 - 0.30) * ref(j), (1.0 + 0.30) * ref(j));
        CHECK(fit(j) == ub);
    }
    for (int k = 0; k < 6; ++k) {
        const Eigen::Index j = 2 * k;
        const double lb = std::min((1.0 - 0.30) * ref(j), (1.0 + 0.30) * ref(j));
        const double ub = std::max((1.0 - 0.30) * ref(j), (1.0 + 0.30) * ref(j));
        CHECK(fit(j) >= lb);
        CHECK(fit(j) <= ub);
    }
}

TEST_CASE("sequence extraction of a diagonal matrix returns the common impedance") {
    LineParameters params;
    const Complex z(0.02, 0.15);
    params.z_abc = Eigen::Matrix3cd::Zero();
    params.z_abc.diagonal().setConstant(z);
    params.b_abc = Eigen::Matrix3d::Identity() * 0.1;
    const SequenceParameters seq = extract_sequence(params);
    CHECK(std::abs(seq.z1 - z) < 1e-15);
    CHECK(std::abs(seq.z0 - z) < 1e-15);
    CHECK(seq.b1 == doctest::Approx(0.1));
    CHECK(seq.b0 == doctest::Approx(0.1));
}

TEST_CASE("sequence extraction matches the direct-substitution example") {
    LineParameters params;
    const Complex zs(0.01, 0.10);
    const Complex zm(0.0, 0.03);
    params.z_abc << zs, zm, zm, zm, zs, zm, zm, zm, zs;
    params.b_abc.setZero();
    const SequenceParameters seq = extract_sequence(params);
    CHECK(seq.z1.real() == doctest::Approx(0.01));
    CHECK(seq.z1.imag() == doctest::Approx(0.07));
    CHECK(seq.z0.real() == doctest::Approx(0.01));
    CHECK(seq.z0.imag() == doctest::Approx(0.16));
}

TEST_CASE("sequence extraction agrees with the transform-diagonalization oracle") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> dist(-0.2, 0.2);
    for (int trial = 0; trial < 20; ++trial) {
        const Complex zs(0.05 + dist(rng), 0.3 + dist(rng));
        const Complex zm(dist(rng), dist(rng));
        LineParameters params;
        params.z_abc << zs, zm, zm, zm, zs, zm, zm, zm, zs;
        params.b_abc.setZero();
        const SequenceParameters seq = extract_sequence(params);
        CHECK(std::abs(seq.z1 - z1_via_transform(params.z_abc)) < 1e-12);
    }
}

} // TEST_SUITE
