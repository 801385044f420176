#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pmucal/gen_estimator.hpp"
#include "pmucal/line_estimator.hpp"
#include "pmucal/refdb.hpp"

namespace pmucal {

struct LabeledValues {
    std::vector<std::string> labels;
    Eigen::VectorXd values;
};

/// Estimator invoked on a resampled index multiset drawn from [0, K).
/// Throwing a NumericalError marks the resample as failed; it is re-drawn.
using IndexedEstimator = std::function<LabeledValues(std::span<const std::size_t>)>;

struct BootstrapConfig {
    std::size_t resample_count = 200; ///< >= 2; 30+ recommended
    std::uint64_t seed = 0;
    int threads = 1;
    int max_retries_per_resample = 20;
};

struct BootstrapDistribution {
    std::string parameter_label;
    std::vector<double> samples;
    double mean = 0.0;
    double std_dev = 0.0; ///< sample standard deviation (B-1 divisor)
};

/// Draws resample_count index multisets of size sample_count with
/// replacement and runs the estimator on each. The resample-to-seed mapping
/// is fixed, so parallel and serial runs produce identical distributions.
/// Throws TooManyFailedResamples when more draws fail than succeed.
std::vector<BootstrapDistribution> bootstrap(std::size_t sample_count,
                                             const IndexedEstimator& estimator,
                                             const BootstrapConfig& config);

struct CredibilityEntry {
    std::string label;
    double estimate = 0.0;
    double reference = 0.0;
    double metric = 0.0; ///< bootstrap std over |reference|
    double threshold = 0.0;
    bool credible = false;
};

/// metric = std_dev / |x_ref|; credible iff metric <= epsilon.
CredibilityEntry credibility_metric(const BootstrapDistribution& dist, double estimate,
                                    double x_ref, double epsilon);

struct ScreeningConfig {
    double epsilon = 0.05;               ///< credibility threshold
    double discrepancy_threshold = 0.10; ///< relative deviation to flag
    std::size_t persistence_m = 3;       ///< flagged windows needed ...
    std::size_t persistence_n = 5;       ///< ... among the last n
    BootstrapConfig bootstrap;
};

struct ParameterScreen {
    CredibilityEntry credibility;
    double deviation = 0.0; ///< |estimate - reference| / |reference|
    bool flagged = false;   ///< implies credible
};

struct ScreeningOutcome {
    std::string window_id;
    std::vector<ParameterScreen> parameters;
    bool window_flagged = false;
    std::size_t flagged_windows = 0; ///< among the retained history
    std::size_t persistence_m = 0;
    std::size_t persistence_n = 0;
    bool consistent_discrepancy = false;
    bool recommend_calibration = false;
};

/// Point estimate + bootstrap + credibility gate + discrepancy comparison +
/// persistence update. Only credible parameters may raise discrepancy flags;
/// the consistent-discrepancy flag needs >= m flagged among the last n
/// windows.
ScreeningOutcome screen(std::size_t sample_count, const IndexedEstimator& estimator,
                        const std::vector<std::pair<std::string, double>>& references,
                        const ScreeningConfig& config, PersistenceState& persistence,
                        const std::string& window_id, std::int64_t window_timestamp_us);

/// Line adapter: estimates the 3-phase parameters on each resample and
/// reports the positive-sequence values R1, X1, B1.
IndexedEstimator make_line_estimator(std::span<const MeasurementSnapshot> snapshots,
                                     const LineParameters& reference, double bound_fraction,
                                     const SolverOptions& options = {});

std::vector<std::pair<std::string, double>> line_screen_references(const LineReference& ref);

/// Generator adapter: resamples regression rows and reports H, T, K_D, K_R.
IndexedEstimator make_gen_estimator(const GenTimeSeries& series,
                                    const SolverOptions& options = {});

std::vector<std::pair<std::string, double>> gen_screen_references(const GenReference& ref);

ScreeningOutcome screen_line(std::span<const MeasurementSnapshot> snapshots,
                             const LineReference& reference, double bound_fraction,
                             const ScreeningConfig& config, PersistenceState& persistence,
                             const std::string& window_id);

ScreeningOutcome screen_gen(const GenTimeSeries& series, const GenReference& reference,
                            const ScreeningConfig& config, PersistenceState& persistence,
                            const std::string& window_id, std::int64_t window_timestamp_us);

} // namespace pmucal
