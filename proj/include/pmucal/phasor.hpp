#pragma once

#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "pmucal/errors.hpp"

namespace pmucal {

using Complex = std::complex<double>;

/// Wraps an angle into (-pi, pi].
double normalize_angle(double radians);

/// Polar-form phasor, magnitude in p.u., angle in radians.
/// Invariants: magnitude finite and non-negative, angle in (-pi, pi].
class Phasor {
public:
    Phasor() = default;
    Phasor(double magnitude, double angle_rad);

    static Phasor from_complex(Complex value);

    double magnitude() const { return magnitude_; }
    double angle() const { return angle_; }
    Complex to_complex() const { return std::polar(magnitude_, angle_); }

    /// Same magnitude, angle shifted by `radians` (re-normalized).
    Phasor rotated(double radians) const { return Phasor(magnitude_, angle_ + radians); }

private:
    double magnitude_ = 0.0;
    double angle_ = 0.0;
};

struct ThreePhaseSet {
    Phasor a, b, c;
};

struct SequenceSet {
    Phasor zero, positive, negative;
};

/// Symmetrical-component transform, analysis form with 1/3 forward scaling
/// and operator a = e^{j2pi/3}:
///   zero     = (x_a +     x_b +     x_c) / 3
///   positive = (x_a + a  *x_b + a^2*x_c) / 3
///   negative = (x_a + a^2*x_b + a  *x_c) / 3
SequenceSet to_sequence(const ThreePhaseSet& abc);

/// Inverse of to_sequence.
ThreePhaseSet from_sequence(const SequenceSet& seq);

/// One timestamped set of 3-phase voltage/current phasors at both line
/// terminals. Sign convention: both currents flow INTO the line at their
/// respective terminals.
struct MeasurementSnapshot {
    std::int64_t timestamp_us = 0;
    ThreePhaseSet v_s; ///< sending-end bus voltage, p.u.
    ThreePhaseSet v_r; ///< receiving-end bus voltage, p.u.
    ThreePhaseSet i_s; ///< sending-end current, p.u.
    ThreePhaseSet i_r; ///< receiving-end current, p.u.
};

/// Series-impedance and shunt-susceptance matrices of the 3-phase PI model.
/// Both matrices are symmetric; the diagonal resistances are non-negative.
struct LineParameters {
    Eigen::Matrix3cd z_abc = Eigen::Matrix3cd::Zero();
    Eigen::Matrix3d b_abc = Eigen::Matrix3d::Zero();

    /// Balanced matrices from sequence values: diagonal (z0 + 2*z1)/3,
    /// off-diagonal (z0 - z1)/3, and the same construction for b.
    static LineParameters balanced(Complex z1, Complex z0, double b1, double b0);

    /// Throws Error when a symmetry or sign invariant is broken.
    void validate() const;
};

/// Systematic magnitude/angle error of one phasor channel.
struct ChannelBias {
    double magnitude = 0.0; ///< p.u.
    double angle = 0.0;     ///< radians
};

/// Per-channel systematic errors of the four phasor channels.
struct BiasVector {
    ChannelBias v_s, v_r, i_s, i_r;

    void validate() const; ///< finite, |angle| < pi/2
};

struct GaussianNoise {
    double sigma_magnitude = 0.0; ///< p.u.
    double sigma_angle = 0.0;     ///< radians
};

/// Corrupts a true phasor into the measured one: the measured value is the
/// one whose bias-corrected form (magnitude + dV, angle + dtheta) equals the
/// true phasor, then zero-mean Gaussian noise is added on magnitude and
/// angle (in that draw order).
Phasor apply_error(const Phasor& true_value, const ChannelBias& bias,
                   const GaussianNoise& noise, std::mt19937_64& rng);

/// Bias correction: returns (magnitude + dV) at (angle + dtheta).
/// Throws ResultNegativeMagnitude when magnitude + dV < 0.
Phasor remove_bias(const Phasor& measured, const ChannelBias& bias);

} // namespace pmucal
