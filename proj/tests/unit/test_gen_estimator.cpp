#include <doctest.h>

#include <cmath>
#include <random>

#include "pmucal/gen_estimator.hpp"
#include "pmucal/simulator.hpp"

using namespace pmucal;

namespace {

GeneratorParameters nominal_params() {
    return GeneratorParameters{4.0, 0.3, 1.0, 0.05};
}

/// Log-uniform draw over the documented valid domain.
GeneratorParameters random_params(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto log_uniform = [&](double lo, double hi) {
        return lo * std::pow(hi / lo, unit(rng));
    };
    GeneratorParameters p;
    p.inertia_h = log_uniform(1.0, 10.0);
    p.turbine_t = log_uniform(0.05, 1.0);
    p.damping_kd = 5.0 * unit(rng); // may be zero
    p.regulation_kr = log_uniform(0.02, 0.2);
    return p;
}

double rel_err(double value, double truth) {
    return std::abs(value - truth) / std::abs(truth);
}

GenScenario step_scenario(const GeneratorParameters& params, std::size_t n, double step,
                          double noise_sigma = 0.0, std::uint64_t seed = 0) {
    GenScenario scenario;
    scenario.params = params;
    scenario.step_h = 0.02;
    scenario.pe_delta_input.assign(n, step);
    scenario.noise_sigma = noise_sigma;
    scenario.rng_seed = seed;
    return scenario;
}

} // namespace

TEST_SUITE("gen_estimator") {

TEST_CASE("b3 follows the direct substitution") {
    GeneratorParameters p = nominal_params();
    const ArmaCoefficients c = arma_from_params(p, 0.02);
    CHECK(c.b3 == doctest::Approx(0.02 / 8.0).epsilon(1e-14));
    CHECK(c.a1 == -2.0);
}

TEST_CASE("coefficient map and parameter recovery are mutual inverses") {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> h_dist(0.005, 0.04);
    for (int trial = 0; trial < 100; ++trial) {
        const GeneratorParameters p = random_params(rng);
        const double h = h_dist(rng);
        const ArmaCoefficients c = arma_from_params(p, h);
        const GeneratorParameters back = params_from_arma(c, h);
        CHECK(rel_err(back.inertia_h, p.inertia_h) < 1e-9);
        CHECK(rel_err(back.turbine_t, p.turbine_t) < 1e-9);
        CHECK(rel_err(back.regulation_kr, p.regulation_kr) < 1e-9);
        if (p.damping_kd > 1e-12) {
            CHECK(rel_err(back.damping_kd, p.damping_kd) < 1e-7);
        } else {
            CHECK(std::abs(back.damping_kd) < 1e-7);
        }
    }
}

TEST_CASE("the a-coefficient identity holds symbolically") {
    // -a2 - a3 + 1 = -h^2 (K_D + 1/K_R) / (2 H T)
    std::mt19937_64 rng(55);
    for (int trial = 0; trial < 50; ++trial) {
        const GeneratorParameters p = random_params(rng);
        const double h = 0.02;
        const ArmaCoefficients c = arma_from_params(p, h);
        const double lhs = -c.a2 - c.a3 + 1.0;
        const double rhs = -h * h * (p.damping_kd + 1.0 / p.regulation_kr) /
                           (2.0 * p.inertia_h * p.turbine_t);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("inertia inversion from b3") {
    ArmaCoefficients c;
    c.b3 = 0.0025;
    c.b2 = -0.004;
    c.a2 = 1.0;
    c.a3 = -0.1;
    const GeneratorParameters p = params_from_arma(c, 0.02);
    CHECK(p.inertia_h == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("vanishing denominators are named") {
    ArmaCoefficients c;
    c.b2 = -0.0025;
    c.b3 = 0.0025; // b2 + b3 == 0
    CHECK_THROWS_WITH_AS(params_from_arma(c, 0.02),
                         doctest::Contains("turbine time constant"), DegenerateCoefficients);

    ArmaCoefficients zero_b3;
    zero_b3.b2 = -0.004;
    CHECK_THROWS_WITH_AS(params_from_arma(zero_b3, 0.02), doctest::Contains("inertia"),
                         DegenerateCoefficients);
}

TEST_CASE("noiseless simulation identifies the generating coefficients") {
    const GeneratorParameters p = nominal_params();
    GenScenario scenario = step_scenario(p, 400, 0.1);
    // A step alone leaves the regression nearly collinear; excite richer
    // dynamics with a second step.
    for (std::size_t k = 200; k < 400; ++k) {
        scenario.pe_delta_input[k] = -0.05;
    }
    const GenTimeSeries series = simulate_gen(scenario);
    const ArmaFit fit = identify_arma(series);
    const ArmaCoefficients expected = arma_from_params(p, scenario.step_h);
    CHECK(std::abs(fit.coefficients.a1 - expected.a1) < 1e-6);
    CHECK(std::abs(fit.coefficients.a2 - expected.a2) < 1e-6);
    CHECK(std::abs(fit.coefficients.a3 - expected.a3) < 1e-6);
    CHECK(std::abs(fit.coefficients.b2 - expected.b2) < 1e-6);
    CHECK(std::abs(fit.coefficients.b3 - expected.b3) < 1e-6);

    const GeneratorParameters recovered = params_from_arma(fit.coefficients, scenario.step_h);
    CHECK(rel_err(recovered.inertia_h, p.inertia_h) < 1e-4);
    CHECK(rel_err(recovered.turbine_t, p.turbine_t) < 1e-4);
    CHECK(rel_err(recovered.damping_kd, p.damping_kd) < 1e-4);
    CHECK(rel_err(recovered.regulation_kr, p.regulation_kr) < 1e-4);
}

TEST_CASE("an all-zero series is rank deficient") {
    GenTimeSeries series;
    series.step_h = 0.02;
    series.w_delta.assign(50, 0.0);
    series.pe_delta.assign(50, 0.0);
    CHECK_THROWS_AS(identify_arma(series), RankDeficient);
}

TEST_CASE("short series are rejected") {
    GenTimeSeries series;
    series.step_h = 0.02;
    series.w_delta.assign(8, 0.1);
    series.pe_delta.assign(8, 0.1);
    CHECK_THROWS_AS(identify_arma(series), TooShortSeries);
}

TEST_CASE("residual variance grows with the noise level") {
    const GeneratorParameters p = nominal_params();
    auto variance_at = [&](double sigma) {
        double total = 0.0;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            GenScenario scenario = step_scenario(p, 400, 0.1, sigma, seed);
            for (std::size_t k = 200; k < 400; ++k) {
                scenario.pe_delta_input[k] = -0.05;
            }
            total += identify_arma(simulate_gen(scenario)).residual_variance;
        }
        return total / 5.0;
    };
    const double quiet = variance_at(1e-6);
    const double loud = variance_at(1e-4);
    CHECK(loud > quiet);
}

} // TEST_SUITE
