#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "pmucal/dbscan.hpp"
#include "pmucal/numerics.hpp"
#include "pmucal/phasor.hpp"
#include "pmucal/refdb.hpp"

namespace pmucal {

/// Positive-sequence view of one snapshot, extracted once per window.
struct PositiveSequenceSnapshot {
    Complex v_s, v_r, i_s, i_r;
};

PositiveSequenceSnapshot positive_sequence_of(const MeasurementSnapshot& snapshot);

/// Candidate positive-sequence line parameters inside the feasibility box.
struct CandidateParameters {
    double r = 0.0, x = 0.0, b = 0.0;
};

/// Seven free bias channels; the sending-voltage angle is the phase
/// reference and fixed at zero (the common rotation of all channels is
/// unobservable).
inline constexpr std::size_t kFreeBiasChannels = 7;
const std::array<std::string, kFreeBiasChannels>& free_bias_channel_names();
inline constexpr const char* kFixedBiasChannelName = "theta_V_S";

BiasVector bias_vector_from_free(const Eigen::Matrix<double, 7, 1>& free_biases);
Eigen::Matrix<double, 7, 1> free_from_bias_vector(const BiasVector& bias);

/// Bias-corrected positive-sequence residuals of the two nodal equations:
///   r1 = V_S - V_R - Z*I_S + j/2*Z*B*V_S      (series drop)
///   r2 = I_S + I_R - j*B/2*(V_S + V_R)        (charging balance)
/// returned as (Re r1, Im r1, Re r2, Im r2).
std::array<double, 4> candidate_residual(const CandidateParameters& candidate,
                                         const PositiveSequenceSnapshot& snapshot,
                                         const BiasVector& bias);

struct BiasFit {
    Eigen::Matrix<double, 7, 1> biases = Eigen::Matrix<double, 7, 1>::Zero();
    double fit_residual = 0.0; ///< residual norm after applying the fit
};

/// Linearized bias solve at one candidate: central-difference sensitivities
/// of the stacked residuals with respect to the seven free channels around
/// zero bias, then one least-squares solve so that correcting the
/// measurements with the result best satisfies the candidate model.
BiasFit estimate_biases(std::span<const PositiveSequenceSnapshot> snapshots,
                        const CandidateParameters& candidate,
                        const SolverOptions& options = {});

struct ScanConfig {
    double alpha = 0.10; ///< error-band multiplier, in (0, 1)
    /// Grid sizes for the (R, X, B) axes; an axis with count 1 is held at
    /// its reference value.
    std::array<std::size_t, 3> points_per_axis{41, 1, 1};
    std::vector<double> dbscan_eps_ladder = default_eps_ladder();
    std::size_t min_pts = 3;
    int threads = 1;

    /// Ten rungs, logarithmic from 1e-5 to 1e-2.
    static std::vector<double> default_eps_ladder();
    void validate() const;
};

struct CandidateSolution {
    CandidateParameters candidate;
    Eigen::Matrix<double, 7, 1> biases = Eigen::Matrix<double, 7, 1>::Zero();
    double fit_residual = 0.0;
};

/// Uniform inclusive grid over the feasibility box around the EMS record,
/// one bias fit per candidate, ordered by grid index (R outermost, B
/// innermost) regardless of execution order.
std::vector<CandidateSolution> scan_feasible_region(
    std::span<const PositiveSequenceSnapshot> snapshots, const LineReference& reference,
    const ScanConfig& config);

struct CalibrationResult {
    CandidateParameters selected;
    std::size_t candidate_index = 0;
    BiasVector bias; ///< all four channels; reference angle restored as 0
    std::vector<std::string> cluster_channels;
    std::vector<std::string> outlier_channels;
    std::vector<double> outlier_values; ///< aligned with outlier_channels
    std::size_t main_cluster_size = 0;
    double winning_eps = 0.0;
    double cluster_spread = 0.0; ///< std dev of main-cluster biases
    double fit_residual = 0.0;
};

/// Per candidate, clusters the seven bias values over the ascending eps
/// ladder and records the smallest eps reaching that candidate's maximum
/// main-cluster size. Selects the candidate with the largest main cluster;
/// ties break by smaller winning eps, then smaller within-cluster standard
/// deviation, then smaller fit residual, then grid order.
CalibrationResult select_by_dbscan(std::span<const CandidateSolution> candidates,
                                   const ScanConfig& config);

/// scan_feasible_region followed by select_by_dbscan.
CalibrationResult calibrate_line(std::span<const MeasurementSnapshot> snapshots,
                                 const LineReference& reference, const ScanConfig& config);

} // namespace pmucal
