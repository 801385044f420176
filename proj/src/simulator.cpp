#include "pmucal/simulator.hpp"

#include <cmath>
#include <numbers>

#include "pmucal/rng.hpp"

namespace pmucal {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Complex kJ{0.0, 1.0};

using PhaseVector = Eigen::Vector3cd;

PhaseVector to_vector(const ThreePhaseSet& set) {
    return PhaseVector(set.a.to_complex(), set.b.to_complex(), set.c.to_complex());
}

ThreePhaseSet to_set(const PhaseVector& v) {
    return ThreePhaseSet{Phasor::from_complex(v(0)), Phasor::from_complex(v(1)),
                         Phasor::from_complex(v(2))};
}

ThreePhaseSet corrupt_channel(const ThreePhaseSet& truth, const ChannelBias& bias,
                              const GaussianNoise& noise, std::mt19937_64& rng) {
    return ThreePhaseSet{apply_error(truth.a, bias, noise, rng),
                         apply_error(truth.b, bias, noise, rng),
                         apply_error(truth.c, bias, noise, rng)};
}

double check_scale(const PhaseVector& a, const PhaseVector& b) {
    return std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
}

} // namespace

void LineScenario::validate() const {
    true_params.validate();
    bias.validate();
    if (snapshot_count == 0) {
        throw Error("scenario requires at least one snapshot");
    }
    if (receiving_voltage_profile.size() < snapshot_count ||
        load_admittance_profile.size() < snapshot_count) {
        throw Error("profiles must cover the snapshot count");
    }
    if (step_us <= 0) {
        throw Error("timestamp step must be positive");
    }
    for (const auto& y : load_admittance_profile) {
        for (int i = 0; i < 3; ++i) {
            if (y(i, i).real() < 0.0) {
                throw Error("load admittance must be passive (non-negative real part)");
            }
        }
    }
}

LineSimulation simulate_line(const LineScenario& scenario) {
    scenario.validate();

    const Eigen::Matrix3cd& z = scenario.true_params.z_abc;
    const Eigen::Matrix3cd zb = z * scenario.true_params.b_abc.cast<Complex>();
    const Eigen::Matrix3cd jb_half =
        0.5 * kJ * scenario.true_params.b_abc.cast<Complex>();

    LineSimulation sim;
    sim.truth.reserve(scenario.snapshot_count);
    sim.measured.reserve(scenario.snapshot_count);

    for (std::size_t k = 0; k < scenario.snapshot_count; ++k) {
        const PhaseVector v_r = to_vector(scenario.receiving_voltage_profile[k]);
        const PhaseVector i_out = scenario.load_admittance_profile[k] * v_r;
        const PhaseVector i_r = -i_out; // into-line convention
        const PhaseVector v_s = v_r + 0.5 * kJ * (zb * v_r) - z * i_r;
        const PhaseVector i_s = jb_half * (v_s + v_r) - i_r;

        if (!v_s.allFinite() || !i_s.allFinite()) {
            throw SingularCircuit("line equations produced non-finite sending-end values");
        }

        MeasurementSnapshot truth;
        truth.timestamp_us =
            scenario.start_timestamp_us + static_cast<std::int64_t>(k) * scenario.step_us;
        truth.v_s = to_set(v_s);
        truth.v_r = to_set(v_r);
        truth.i_s = to_set(i_s);
        truth.i_r = to_set(i_r);

        // Self-check: the snapshot (after polar round-trip) satisfies the
        // nodal equations to 1e-12.
        {
            const PhaseVector tv_s = to_vector(truth.v_s);
            const PhaseVector tv_r = to_vector(truth.v_r);
            const PhaseVector ti_s = to_vector(truth.i_s);
            const PhaseVector ti_r = to_vector(truth.i_r);
            const PhaseVector res1 = tv_s - tv_r - z * ti_s + 0.5 * kJ * (zb * tv_s);
            const PhaseVector res2 = ti_s + ti_r - jb_half * (tv_s + tv_r);
            const double scale = check_scale(tv_s, ti_s);
            if (res1.cwiseAbs().maxCoeff() > 1e-12 * scale ||
                res2.cwiseAbs().maxCoeff() > 1e-12 * scale) {
                throw SingularCircuit("truth snapshot violates the line equations");
            }
        }

        MeasurementSnapshot measured = truth;
        auto rng = make_engine(scenario.rng_seed, k);
        measured.v_s = corrupt_channel(truth.v_s, scenario.bias.v_s, scenario.noise, rng);
        measured.v_r = corrupt_channel(truth.v_r, scenario.bias.v_r, scenario.noise, rng);
        measured.i_s = corrupt_channel(truth.i_s, scenario.bias.i_s, scenario.noise, rng);
        measured.i_r = corrupt_channel(truth.i_r, scenario.bias.i_r, scenario.noise, rng);

        sim.truth.push_back(truth);
        sim.measured.push_back(measured);
    }
    return sim;
}

LineScenario make_line_scenario(const LineScenarioOptions& options) {
    LineScenario scenario;
    scenario.true_params = LineParameters::balanced(options.z1, options.z0, options.b1, options.b0);
    scenario.noise = options.noise;
    scenario.bias = options.bias;
    scenario.snapshot_count = options.snapshots;
    scenario.rng_seed = options.seed;
    scenario.start_timestamp_us = options.start_timestamp_us;
    scenario.step_us = options.step_us;

    auto rng = make_engine(options.seed, 0x9f0fULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto centered = [&] { return 2.0 * unit(rng) - 1.0; };

    scenario.receiving_voltage_profile.reserve(options.snapshots);
    scenario.load_admittance_profile.reserve(options.snapshots);
    for (std::size_t k = 0; k < options.snapshots; ++k) {
        // Operating point: modest swings in voltage level and phase, load
        // magnitude +/-30% with a lagging power factor.
        const double v_mag = 1.0 + 0.02 * centered();
        const double v_ang = 0.05 * centered();
        const double y_mag = 1.0 + 0.3 * centered();
        const double y_ang = -(5.0 + 20.0 * unit(rng)) * kPi / 180.0;

        const Phasor base(v_mag, v_ang);
        ThreePhaseSet v_r;
        Eigen::Vector3d mag_factor, ang_shift, y_factor;
        for (int p = 0; p < 3; ++p) {
            mag_factor(p) = 1.0 + options.unbalance * centered();
            ang_shift(p) = options.unbalance * 0.1 * centered();
            y_factor(p) = 1.0 + options.unbalance * centered();
        }
        v_r.a = Phasor(base.magnitude() * mag_factor(0), base.angle() + ang_shift(0));
        v_r.b = Phasor(base.magnitude() * mag_factor(1),
                       base.angle() - 2.0 * kPi / 3.0 + ang_shift(1));
        v_r.c = Phasor(base.magnitude() * mag_factor(2),
                       base.angle() + 2.0 * kPi / 3.0 + ang_shift(2));

        Eigen::Matrix3cd y_load = Eigen::Matrix3cd::Zero();
        for (int p = 0; p < 3; ++p) {
            y_load(p, p) = std::polar(y_mag * y_factor(p), y_ang);
        }

        scenario.receiving_voltage_profile.push_back(v_r);
        scenario.load_admittance_profile.push_back(y_load);
    }
    return scenario;
}

void GenScenario::validate() const {
    params.validate();
    if (step_h <= 0.0 || !std::isfinite(step_h)) {
        throw Error("sampling period must be positive and finite");
    }
    if (pe_delta_input.size() < 10) {
        throw TooShortSeries("excitation input needs at least 10 samples");
    }
    if (noise_sigma < 0.0) {
        throw Error("noise sigma must be non-negative");
    }
}

GenTimeSeries simulate_gen(const GenScenario& scenario) {
    scenario.validate();
    const ArmaCoefficients c = arma_from_params(scenario.params, scenario.step_h);
    const std::size_t n = scenario.pe_delta_input.size();

    std::vector<double> w(n, 0.0);
    w[0] = scenario.initial_w[0];
    w[1] = scenario.initial_w[1];
    w[2] = scenario.initial_w[2];
    const std::vector<double>& u = scenario.pe_delta_input;
    for (std::size_t k = 3; k < n; ++k) {
        w[k] = -c.a1 * w[k - 1] - c.a2 * w[k - 2] - c.a3 * w[k - 3] + c.b2 * u[k - 2] +
               c.b3 * u[k - 3];
        if (std::abs(w[k]) > 1e6) {
            throw UnstableRecursion("frequency-deviation recursion diverged");
        }
    }

    if (scenario.noise_sigma > 0.0) {
        auto rng = make_engine(scenario.rng_seed, 0x6e01ULL);
        std::normal_distribution<double> dist(0.0, scenario.noise_sigma);
        for (double& sample : w) {
            sample += dist(rng);
        }
    }

    GenTimeSeries series;
    series.step_h = scenario.step_h;
    series.w_delta = std::move(w);
    series.pe_delta = scenario.pe_delta_input;
    series.validate();
    return series;
}

} // namespace pmucal
