#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pmucal/gen_estimator.hpp"
#include "pmucal/phasor.hpp"

namespace pmucal {

/// Forward-constructed line experiment: receiving-end voltage and load are
/// given, sending-end quantities are computed so every truth snapshot
/// satisfies the PI-model nodal equations exactly.
struct LineScenario {
    LineParameters true_params;
    std::vector<ThreePhaseSet> receiving_voltage_profile;
    std::vector<Eigen::Matrix3cd> load_admittance_profile; ///< p.u., passive
    GaussianNoise noise;
    BiasVector bias; ///< applied identically to all three phases of a channel
    std::size_t snapshot_count = 0;
    std::uint64_t rng_seed = 0;
    std::int64_t start_timestamp_us = 0;
    std::int64_t step_us = 1'000'000;

    void validate() const;
};

struct LineSimulation {
    std::vector<MeasurementSnapshot> truth;
    std::vector<MeasurementSnapshot> measured;
};

/// Per step: receiving current is the load draw reversed into the line,
/// then V_S = (I + j/2*Z*B)*V_R - Z*I_R and I_S = j*B/2*(V_S + V_R) - I_R.
/// Truth snapshots are self-checked against the nodal equations to 1e-12;
/// measured snapshots add the channel biases and Gaussian noise.
LineSimulation simulate_line(const LineScenario& scenario);

/// Knobs for the default desk-scale scenario: a balanced line with
/// z1 = 0.01 + j0.10 p.u., b1 = 0.20 p.u., z0 = 3*z1, and a load whose
/// admittance magnitude varies +/-30% around 1.0 p.u. `unbalance` scales a
/// random per-phase perturbation of load and receiving voltage; zero keeps
/// every snapshot exactly balanced.
struct LineScenarioOptions {
    std::size_t snapshots = 20;
    Complex z1{0.01, 0.10};
    Complex z0{0.03, 0.30};
    double b1 = 0.20;
    double b0 = 0.20;
    double unbalance = 0.01;
    GaussianNoise noise;
    BiasVector bias;
    std::uint64_t seed = 1;
    std::int64_t start_timestamp_us = 0;
    std::int64_t step_us = 1'000'000;
};

LineScenario make_line_scenario(const LineScenarioOptions& options);

struct GenScenario {
    GeneratorParameters params;
    double step_h = 0.02;
    std::vector<double> pe_delta_input; ///< excitation, p.u.
    double noise_sigma = 0.0;           ///< measurement noise on w_delta
    std::uint64_t rng_seed = 0;
    std::array<double, 3> initial_w{0.0, 0.0, 0.0};

    void validate() const;
};

/// Runs the closed-loop difference recursion seeded by the initial values;
/// throws UnstableRecursion when the output exceeds 1e6.
GenTimeSeries simulate_gen(const GenScenario& scenario);

} // namespace pmucal
