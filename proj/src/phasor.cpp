#include "pmucal/phasor.hpp"

#include <cmath>
#include <numbers>

namespace pmucal {

namespace {

constexpr double kPi = std::numbers::pi;

const Complex kAlpha = std::polar(1.0, 2.0 * kPi / 3.0);  // a
const Complex kAlpha2 = std::polar(1.0, -2.0 * kPi / 3.0); // a^2 = conj(a)

} // namespace

double normalize_angle(double radians) {
    if (!std::isfinite(radians)) {
        throw Error("phasor angle is not finite");
    }
    if (radians > -kPi && radians <= kPi) {
        return radians; // already normalized; keep bit-exact
    }
    double a = std::fmod(radians + kPi, 2.0 * kPi);
    if (a <= 0.0) {
        a += 2.0 * kPi;
    }
    return a - kPi;
}

Phasor::Phasor(double magnitude, double angle_rad)
    : magnitude_(magnitude), angle_(normalize_angle(angle_rad)) {
    if (!std::isfinite(magnitude) || magnitude < 0.0) {
        throw Error("phasor magnitude must be finite and non-negative");
    }
}

Phasor Phasor::from_complex(Complex value) {
    if (!std::isfinite(value.real()) || !std::isfinite(value.imag())) {
        throw Error("phasor value is not finite");
    }
    return Phasor(std::abs(value), std::arg(value));
}

SequenceSet to_sequence(const ThreePhaseSet& abc) {
    const Complex xa = abc.a.to_complex();
    const Complex xb = abc.b.to_complex();
    const Complex xc = abc.c.to_complex();
    return SequenceSet{
        Phasor::from_complex((xa + xb + xc) / 3.0),
        Phasor::from_complex((xa + kAlpha * xb + kAlpha2 * xc) / 3.0),
        Phasor::from_complex((xa + kAlpha2 * xb + kAlpha * xc) / 3.0),
    };
}

ThreePhaseSet from_sequence(const SequenceSet& seq) {
    const Complex x0 = seq.zero.to_complex();
    const Complex x1 = seq.positive.to_complex();
    const Complex x2 = seq.negative.to_complex();
    return ThreePhaseSet{
        Phasor::from_complex(x0 + x1 + x2),
        Phasor::from_complex(x0 + kAlpha2 * x1 + kAlpha * x2),
        Phasor::from_complex(x0 + kAlpha * x1 + kAlpha2 * x2),
    };
}

LineParameters LineParameters::balanced(Complex z1, Complex z0, double b1, double b0) {
    const Complex zs = (z0 + 2.0 * z1) / 3.0;
    const Complex zm = (z0 - z1) / 3.0;
    const double bs = (b0 + 2.0 * b1) / 3.0;
    const double bm = (b0 - b1) / 3.0;

    LineParameters p;
    p.z_abc << zs, zm, zm,
               zm, zs, zm,
               zm, zm, zs;
    p.b_abc << bs, bm, bm,
               bm, bs, bm,
               bm, bm, bs;
    return p;
}

void LineParameters::validate() const {
    if (!z_abc.allFinite() || !b_abc.allFinite()) {
        throw Error("line parameter matrices must be finite");
    }
    if (z_abc != z_abc.transpose().eval() || b_abc != b_abc.transpose().eval()) {
        throw Error("line parameter matrices must be exactly symmetric");
    }
    for (int i = 0; i < 3; ++i) {
        if (z_abc(i, i).real() < 0.0) {
            throw Error("diagonal series resistances must be non-negative");
        }
    }
}

void BiasVector::validate() const {
    for (const ChannelBias* ch : {&v_s, &v_r, &i_s, &i_r}) {
        if (!std::isfinite(ch->magnitude) || !std::isfinite(ch->angle)) {
            throw Error("bias values must be finite");
        }
        if (std::abs(ch->angle) >= kPi / 2.0) {
            throw Error("bias angle magnitude must be below pi/2");
        }
    }
}

Phasor apply_error(const Phasor& true_value, const ChannelBias& bias,
                   const GaussianNoise& noise, std::mt19937_64& rng) {
    if (noise.sigma_magnitude < 0.0 || noise.sigma_angle < 0.0) {
        throw Error("noise standard deviations must be non-negative");
    }
    double magnitude = true_value.magnitude() - bias.magnitude;
    double angle = true_value.angle() - bias.angle;
    if (noise.sigma_magnitude > 0.0) {
        std::normal_distribution<double> dist(0.0, noise.sigma_magnitude);
        magnitude += dist(rng);
    }
    if (noise.sigma_angle > 0.0) {
        std::normal_distribution<double> dist(0.0, noise.sigma_angle);
        angle += dist(rng);
    }
    // A magnitude driven below zero by extreme bias/noise folds through the
    // origin; measured phasors stay valid.
    if (magnitude < 0.0) {
        return Phasor(-magnitude, angle + kPi);
    }
    return Phasor(magnitude, angle);
}

Phasor remove_bias(const Phasor& measured, const ChannelBias& bias) {
    const double magnitude = measured.magnitude() + bias.magnitude;
    if (magnitude < 0.0) {
        throw ResultNegativeMagnitude("bias correction yields negative magnitude");
    }
    return Phasor(magnitude, measured.angle() + bias.angle);
}

} // namespace pmucal
