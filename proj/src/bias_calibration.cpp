#include "pmucal/bias_calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace pmucal {

namespace {

constexpr Complex kJ{0.0, 1.0};

Complex corrected(Complex measured, double d_mag, double d_ang) {
    const Phasor ph = Phasor::from_complex(measured);
    return remove_bias(ph, ChannelBias{d_mag, d_ang}).to_complex();
}

Eigen::VectorXd stacked_residual(std::span<const PositiveSequenceSnapshot> snapshots,
                                 const CandidateParameters& candidate, const BiasVector& bias) {
    Eigen::VectorXd r(4 * static_cast<Eigen::Index>(snapshots.size()));
    Eigen::Index row = 0;
    for (const auto& snap : snapshots) {
        const auto values = candidate_residual(candidate, snap, bias);
        r(row++) = values[0];
        r(row++) = values[1];
        r(row++) = values[2];
        r(row++) = values[3];
    }
    return r;
}

double sample_std(const std::vector<double>& values) {
    if (values.size() < 2) {
        return 0.0;
    }
    double mean = 0.0;
    for (double v : values) {
        mean += v;
    }
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::vector<double> axis_grid(double reference, double alpha, std::size_t count) {
    std::vector<double> grid;
    grid.reserve(count);
    if (count == 1) {
        grid.push_back(reference);
        return grid;
    }
    const double lo = (1.0 - alpha) * reference;
    const double hi = (1.0 + alpha) * reference;
    for (std::size_t i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(count - 1);
        grid.push_back(lo + t * (hi - lo));
    }
    return grid;
}

struct CandidateScore {
    std::size_t main_cluster_size = 0;
    double winning_eps = std::numeric_limits<double>::infinity();
    double cluster_spread = std::numeric_limits<double>::infinity();
    int main_cluster_label = kOutlier;
};

/// Clusters one candidate's biases over the ladder and keeps the smallest
/// eps achieving its maximum main-cluster size.
CandidateScore score_candidate(const CandidateSolution& solution, const ScanConfig& config) {
    std::array<double, kFreeBiasChannels> values;
    for (std::size_t i = 0; i < kFreeBiasChannels; ++i) {
        values[i] = solution.biases(static_cast<Eigen::Index>(i));
    }

    CandidateScore score;
    for (double eps : config.dbscan_eps_ladder) {
        const Clustering clustering =
            cluster_dbscan(std::span<const double>(values), DbscanConfig{eps, config.min_pts});
        std::size_t best_size = 0;
        int best_label = kOutlier;
        for (int c = 0; c < clustering.cluster_count; ++c) {
            const std::size_t size = clustering.cluster_size(c);
            if (size > best_size) {
                best_size = size;
                best_label = c;
            }
        }
        if (best_size > score.main_cluster_size) {
            score.main_cluster_size = best_size;
            score.winning_eps = eps;
            score.main_cluster_label = best_label;
            std::vector<double> members;
            for (std::size_t i = 0; i < kFreeBiasChannels; ++i) {
                if (clustering.labels[i] == best_label) {
                    members.push_back(values[i]);
                }
            }
            score.cluster_spread = sample_std(members);
        }
    }
    return score;
}

} // namespace

PositiveSequenceSnapshot positive_sequence_of(const MeasurementSnapshot& snapshot) {
    return PositiveSequenceSnapshot{
        to_sequence(snapshot.v_s).positive.to_complex(),
        to_sequence(snapshot.v_r).positive.to_complex(),
        to_sequence(snapshot.i_s).positive.to_complex(),
        to_sequence(snapshot.i_r).positive.to_complex(),
    };
}

const std::array<std::string, kFreeBiasChannels>& free_bias_channel_names() {
    static const std::array<std::string, kFreeBiasChannels> names = {
        "V_S", "V_R", "I_S", "I_R", "theta_V_R", "theta_I_S", "theta_I_R"};
    return names;
}

BiasVector bias_vector_from_free(const Eigen::Matrix<double, 7, 1>& free_biases) {
    BiasVector bias;
    bias.v_s = ChannelBias{free_biases(0), 0.0};
    bias.v_r = ChannelBias{free_biases(1), free_biases(4)};
    bias.i_s = ChannelBias{free_biases(2), free_biases(5)};
    bias.i_r = ChannelBias{free_biases(3), free_biases(6)};
    return bias;
}

Eigen::Matrix<double, 7, 1> free_from_bias_vector(const BiasVector& bias) {
    Eigen::Matrix<double, 7, 1> free_biases;
    free_biases << bias.v_s.magnitude, bias.v_r.magnitude, bias.i_s.magnitude,
        bias.i_r.magnitude, bias.v_r.angle, bias.i_s.angle, bias.i_r.angle;
    return free_biases;
}

std::array<double, 4> candidate_residual(const CandidateParameters& candidate,
                                         const PositiveSequenceSnapshot& snapshot,
                                         const BiasVector& bias) {
    const Complex v_s = corrected(snapshot.v_s, bias.v_s.magnitude, bias.v_s.angle);
    const Complex v_r = corrected(snapshot.v_r, bias.v_r.magnitude, bias.v_r.angle);
    const Complex i_s = corrected(snapshot.i_s, bias.i_s.magnitude, bias.i_s.angle);
    const Complex i_r = corrected(snapshot.i_r, bias.i_r.magnitude, bias.i_r.angle);

    const Complex z(candidate.r, candidate.x);
    const Complex r1 = v_s - v_r - z * i_s + 0.5 * kJ * z * candidate.b * v_s;
    const Complex r2 = i_s + i_r - 0.5 * kJ * candidate.b * (v_s + v_r);
    return {r1.real(), r1.imag(), r2.real(), r2.imag()};
}

BiasFit estimate_biases(std::span<const PositiveSequenceSnapshot> snapshots,
                        const CandidateParameters& candidate, const SolverOptions& options) {
    if (snapshots.size() < 2) {
        throw TooFewSnapshots("bias estimation needs at least 2 snapshots");
    }
    const Eigen::Index rows = 4 * static_cast<Eigen::Index>(snapshots.size());

    const Eigen::VectorXd r0 = stacked_residual(snapshots, candidate, BiasVector{});

    // Central-difference sensitivity of the residual stack to each free
    // channel, evaluated at zero bias.
    Eigen::MatrixXd sensitivity(rows, static_cast<Eigen::Index>(kFreeBiasChannels));
    const double step = 1e-6;
    for (std::size_t c = 0; c < kFreeBiasChannels; ++c) {
        Eigen::Matrix<double, 7, 1> plus = Eigen::Matrix<double, 7, 1>::Zero();
        plus(static_cast<Eigen::Index>(c)) = step;
        const Eigen::VectorXd r_plus =
            stacked_residual(snapshots, candidate, bias_vector_from_free(plus));
        const Eigen::VectorXd r_minus =
            stacked_residual(snapshots, candidate, bias_vector_from_free(-plus));
        sensitivity.col(static_cast<Eigen::Index>(c)) = (r_plus - r_minus) / (2.0 * step);
    }

    // Minimize ||r0 + S*b||: applying the fitted correction must best
    // satisfy the candidate model.
    RegressionSystem sys;
    sys.design = sensitivity;
    sys.observations = -r0;
    sys.column_labels.assign(free_bias_channel_names().begin(), free_bias_channel_names().end());
    const LsSolution solution = solve_least_squares(sys, options);

    BiasFit fit;
    fit.biases = solution.x;
    fit.fit_residual =
        stacked_residual(snapshots, candidate, bias_vector_from_free(fit.biases)).norm();
    return fit;
}

std::vector<double> ScanConfig::default_eps_ladder() {
    std::vector<double> ladder;
    ladder.reserve(10);
    for (int i = 0; i < 10; ++i) {
        ladder.push_back(std::pow(10.0, -5.0 + 3.0 * static_cast<double>(i) / 9.0));
    }
    return ladder;
}

void ScanConfig::validate() const {
    if (alpha <= 0.0 || alpha >= 1.0) {
        throw Error("alpha must lie in (0, 1)");
    }
    for (std::size_t count : points_per_axis) {
        if (count < 1) {
            throw Error("each grid axis needs at least one point");
        }
    }
    if (dbscan_eps_ladder.empty()) {
        throw Error("eps ladder must be non-empty");
    }
    if (!std::is_sorted(dbscan_eps_ladder.begin(), dbscan_eps_ladder.end())) {
        throw Error("eps ladder must be ascending");
    }
    if (min_pts < 1) {
        throw Error("min_pts must be at least 1");
    }
}

std::vector<CandidateSolution> scan_feasible_region(
    std::span<const PositiveSequenceSnapshot> snapshots, const LineReference& reference,
    const ScanConfig& config) {
    config.validate();
    reference.validate();

    const auto r_grid = axis_grid(reference.r_ems, config.alpha, config.points_per_axis[0]);
    const auto x_grid = axis_grid(reference.x_ems, config.alpha, config.points_per_axis[1]);
    const auto b_grid = axis_grid(reference.b_ems, config.alpha, config.points_per_axis[2]);

    std::vector<CandidateParameters> grid;
    grid.reserve(r_grid.size() * x_grid.size() * b_grid.size());
    for (double r : r_grid) {
        for (double x : x_grid) {
            for (double b : b_grid) {
                grid.push_back(CandidateParameters{r, x, b});
            }
        }
    }

    std::vector<CandidateSolution> solutions(grid.size());
    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const BiasFit fit = estimate_biases(snapshots, grid[i]);
            solutions[i] = CandidateSolution{grid[i], fit.biases, fit.fit_residual};
        }
    };

    const int threads = std::max(1, config.threads);
    if (threads == 1 || grid.size() < 2 * static_cast<std::size_t>(threads)) {
        run_range(0, grid.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (grid.size() + static_cast<std::size_t>(threads) - 1) /
                                  static_cast<std::size_t>(threads);
        for (int t = 0; t < threads; ++t) {
            const std::size_t begin = static_cast<std::size_t>(t) * chunk;
            const std::size_t end = std::min(grid.size(), begin + chunk);
            if (begin < end) {
                pool.emplace_back(run_range, begin, end);
            }
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    return solutions;
}

CalibrationResult select_by_dbscan(std::span<const CandidateSolution> candidates,
                                   const ScanConfig& config) {
    config.validate();
    if (candidates.empty()) {
        throw NoCandidates("selection requires at least one candidate");
    }

    std::size_t best_index = 0;
    CandidateScore best_score;
    bool have_best = false;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const CandidateScore score = score_candidate(candidates[i], config);
        const auto key = [](const CandidateScore& s, double fit_residual) {
            return std::make_tuple(s.main_cluster_size,
                                   -s.winning_eps,
                                   -s.cluster_spread,
                                   -fit_residual);
        };
        if (!have_best ||
            key(score, candidates[i].fit_residual) > key(best_score, candidates[best_index].fit_residual)) {
            best_index = i;
            best_score = score;
            have_best = true;
        }
    }

    const CandidateSolution& winner = candidates[best_index];
    CalibrationResult result;
    result.selected = winner.candidate;
    result.candidate_index = best_index;
    result.bias = bias_vector_from_free(winner.biases);
    result.main_cluster_size = best_score.main_cluster_size;
    result.winning_eps = best_score.winning_eps;
    result.cluster_spread = best_score.cluster_spread;
    result.fit_residual = winner.fit_residual;

    // Re-cluster at the winning eps to report channel roles.
    if (best_score.main_cluster_size > 0) {
        std::array<double, kFreeBiasChannels> values;
        for (std::size_t i = 0; i < kFreeBiasChannels; ++i) {
            values[i] = winner.biases(static_cast<Eigen::Index>(i));
        }
        const Clustering clustering = cluster_dbscan(
            std::span<const double>(values), DbscanConfig{best_score.winning_eps, config.min_pts});
        for (std::size_t i = 0; i < kFreeBiasChannels; ++i) {
            if (clustering.labels[i] == kOutlier) {
                result.outlier_channels.push_back(free_bias_channel_names()[i]);
                result.outlier_values.push_back(values[i]);
            } else {
                result.cluster_channels.push_back(free_bias_channel_names()[i]);
            }
        }
    } else {
        for (std::size_t i = 0; i < kFreeBiasChannels; ++i) {
            result.outlier_channels.push_back(free_bias_channel_names()[i]);
            result.outlier_values.push_back(winner.biases(static_cast<Eigen::Index>(i)));
        }
    }
    return result;
}

CalibrationResult calibrate_line(std::span<const MeasurementSnapshot> snapshots,
                                 const LineReference& reference, const ScanConfig& config) {
    std::vector<PositiveSequenceSnapshot> sequence;
    sequence.reserve(snapshots.size());
    for (const auto& snap : snapshots) {
        sequence.push_back(positive_sequence_of(snap));
    }
    const auto candidates = scan_feasible_region(sequence, reference, config);
    return select_by_dbscan(candidates, config);
}

} // namespace pmucal
