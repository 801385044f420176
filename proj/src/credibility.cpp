#include "pmucal/credibility.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

#include "pmucal/rng.hpp"

namespace pmucal {

namespace {

// Stream spacing between resample indices; must exceed the retry cap.
constexpr std::uint64_t kRetryStride = 64;

std::vector<std::size_t> draw_indices(std::size_t sample_count, std::uint64_t seed,
                                      std::uint64_t stream) {
    auto rng = make_engine(seed, stream);
    std::uniform_int_distribution<std::size_t> pick(0, sample_count - 1);
    std::vector<std::size_t> indices(sample_count);
    for (auto& index : indices) {
        index = pick(rng);
    }
    return indices;
}

} // namespace

std::vector<BootstrapDistribution> bootstrap(std::size_t sample_count,
                                             const IndexedEstimator& estimator,
                                             const BootstrapConfig& config) {
    if (sample_count == 0) {
        throw EmptyInput("bootstrap requires at least one sample");
    }
    if (config.resample_count < 2) {
        throw Error("bootstrap needs at least 2 resamples");
    }
    if (config.max_retries_per_resample < 1 ||
        static_cast<std::uint64_t>(config.max_retries_per_resample) >= kRetryStride) {
        throw Error("retry cap must be in [1, 63]");
    }

    const std::size_t b_count = config.resample_count;
    std::vector<LabeledValues> results(b_count);
    std::atomic<std::size_t> discarded{0};
    std::atomic<bool> aborted{false};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t b = begin; b < end && !aborted.load(); ++b) {
            bool done = false;
            for (int attempt = 0; attempt < config.max_retries_per_resample; ++attempt) {
                const auto indices = draw_indices(
                    sample_count, config.seed,
                    static_cast<std::uint64_t>(b) * kRetryStride +
                        static_cast<std::uint64_t>(attempt));
                try {
                    results[b] = estimator(indices);
                    done = true;
                    break;
                } catch (const NumericalError&) {
                    if (discarded.fetch_add(1) + 1 > b_count) {
                        done = false;
                        break;
                    }
                }
            }
            if (!done) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) {
                    failure = std::make_exception_ptr(TooManyFailedResamples(
                        "more than half of the bootstrap resamples failed"));
                }
                aborted.store(true);
                return;
            }
        }
    };

    const int threads = std::max(1, config.threads);
    if (threads == 1 || b_count < 2 * static_cast<std::size_t>(threads)) {
        run_range(0, b_count);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (b_count + static_cast<std::size_t>(threads) - 1) /
                                  static_cast<std::size_t>(threads);
        for (int t = 0; t < threads; ++t) {
            const std::size_t begin = static_cast<std::size_t>(t) * chunk;
            const std::size_t end = std::min(b_count, begin + chunk);
            if (begin < end) {
                pool.emplace_back(run_range, begin, end);
            }
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    const std::vector<std::string>& labels = results.front().labels;
    for (const auto& r : results) {
        if (r.labels != labels || r.values.size() != static_cast<Eigen::Index>(labels.size())) {
            throw Error("estimator returned inconsistent parameter sets across resamples");
        }
    }

    std::vector<BootstrapDistribution> distributions(labels.size());
    for (std::size_t p = 0; p < labels.size(); ++p) {
        BootstrapDistribution& dist = distributions[p];
        dist.parameter_label = labels[p];
        dist.samples.resize(b_count);
        for (std::size_t b = 0; b < b_count; ++b) {
            dist.samples[b] = results[b].values(static_cast<Eigen::Index>(p));
        }
        dist.mean = std::accumulate(dist.samples.begin(), dist.samples.end(), 0.0) /
                    static_cast<double>(b_count);
        double ss = 0.0;
        for (double v : dist.samples) {
            ss += (v - dist.mean) * (v - dist.mean);
        }
        dist.std_dev = std::sqrt(ss / static_cast<double>(b_count - 1));
    }
    return distributions;
}

CredibilityEntry credibility_metric(const BootstrapDistribution& dist, double estimate,
                                    double x_ref, double epsilon) {
    if (x_ref == 0.0) {
        throw ZeroReference("credibility metric undefined for zero reference ('" +
                            dist.parameter_label + "')");
    }
    CredibilityEntry entry;
    entry.label = dist.parameter_label;
    entry.estimate = estimate;
    entry.reference = x_ref;
    entry.threshold = epsilon;
    entry.metric = dist.std_dev / std::abs(x_ref);
    entry.credible = entry.metric <= epsilon;
    return entry;
}

ScreeningOutcome screen(std::size_t sample_count, const IndexedEstimator& estimator,
                        const std::vector<std::pair<std::string, double>>& references,
                        const ScreeningConfig& config, PersistenceState& persistence,
                        const std::string& window_id, std::int64_t window_timestamp_us) {
    if (config.persistence_m < 1 || config.persistence_n < config.persistence_m) {
        throw Error("persistence policy requires 1 <= m <= n");
    }

    // Point estimate on the full window.
    std::vector<std::size_t> all(sample_count);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const LabeledValues point = estimator(all);

    const auto distributions = bootstrap(sample_count, estimator, config.bootstrap);

    ScreeningOutcome outcome;
    outcome.window_id = window_id;
    outcome.persistence_m = config.persistence_m;
    outcome.persistence_n = config.persistence_n;

    for (const auto& [label, reference] : references) {
        const BootstrapDistribution* dist = nullptr;
        double estimate = 0.0;
        for (std::size_t p = 0; p < point.labels.size(); ++p) {
            if (point.labels[p] == label) {
                dist = &distributions[p];
                estimate = point.values(static_cast<Eigen::Index>(p));
                break;
            }
        }
        if (dist == nullptr) {
            throw MissingReference("estimator does not produce parameter '" + label + "'");
        }

        ParameterScreen screen_entry;
        screen_entry.credibility = credibility_metric(*dist, estimate, reference, config.epsilon);
        screen_entry.deviation = std::abs(estimate - reference) / std::abs(reference);
        // Fig-5 gating order: only credible estimates may raise flags.
        screen_entry.flagged = screen_entry.credibility.credible &&
                               screen_entry.deviation > config.discrepancy_threshold;
        outcome.window_flagged = outcome.window_flagged || screen_entry.flagged;
        outcome.parameters.push_back(std::move(screen_entry));
    }

    persistence.record(ScreeningWindow{window_id, outcome.window_flagged, window_timestamp_us},
                       config.persistence_n);
    outcome.flagged_windows = persistence.flagged_count();
    outcome.consistent_discrepancy = outcome.flagged_windows >= config.persistence_m;
    outcome.recommend_calibration = outcome.consistent_discrepancy;
    return outcome;
}

IndexedEstimator make_line_estimator(std::span<const MeasurementSnapshot> snapshots,
                                     const LineParameters& reference, double bound_fraction,
                                     const SolverOptions& options) {
    std::vector<MeasurementSnapshot> owned(snapshots.begin(), snapshots.end());
    return [owned = std::move(owned), reference, bound_fraction,
            options](std::span<const std::size_t> indices) {
        std::vector<MeasurementSnapshot> resample;
        resample.reserve(indices.size());
        for (std::size_t i : indices) {
            resample.push_back(owned.at(i));
        }
        const LineEstimate estimate = estimate_line(resample, reference, bound_fraction, options);
        const SequenceParameters seq = extract_sequence(estimate.params);
        LabeledValues out;
        out.labels = {"R1", "X1", "B1"};
        out.values.resize(3);
        out.values << seq.z1.real(), seq.z1.imag(), seq.b1;
        return out;
    };
}

std::vector<std::pair<std::string, double>> line_screen_references(const LineReference& ref) {
    return {{"R1", ref.r_ems}, {"X1", ref.x_ems}, {"B1", ref.b_ems}};
}

IndexedEstimator make_gen_estimator(const GenTimeSeries& series, const SolverOptions& options) {
    const RegressionSystem regression = assemble_arma_regression(series);
    const double step_h = series.step_h;
    return [regression, step_h, options](std::span<const std::size_t> indices) {
        const ArmaFit fit = identify_arma_rows(regression, indices, options);
        const GeneratorParameters params = params_from_arma(fit.coefficients, step_h);
        LabeledValues out;
        out.labels = {"H", "T", "KD", "KR"};
        out.values.resize(4);
        out.values << params.inertia_h, params.turbine_t, params.damping_kd,
            params.regulation_kr;
        return out;
    };
}

std::vector<std::pair<std::string, double>> gen_screen_references(const GenReference& ref) {
    return {{"H", ref.h_ref}, {"T", ref.t_ref}, {"KD", ref.kd_ref}, {"KR", ref.kr_ref}};
}

ScreeningOutcome screen_line(std::span<const MeasurementSnapshot> snapshots,
                             const LineReference& reference, double bound_fraction,
                             const ScreeningConfig& config, PersistenceState& persistence,
                             const std::string& window_id) {
    if (snapshots.empty()) {
        throw TooFewSnapshots("screening window is empty");
    }
    const LineParameters expanded = expand_reference(reference);
    const auto estimator = make_line_estimator(snapshots, expanded, bound_fraction);
    return screen(snapshots.size(), estimator, line_screen_references(reference), config,
                  persistence, window_id, snapshots.back().timestamp_us);
}

ScreeningOutcome screen_gen(const GenTimeSeries& series, const GenReference& reference,
                            const ScreeningConfig& config, PersistenceState& persistence,
                            const std::string& window_id, std::int64_t window_timestamp_us) {
    const RegressionSystem regression = assemble_arma_regression(series);
    const auto estimator = make_gen_estimator(series);
    return screen(static_cast<std::size_t>(regression.rows()), estimator,
                  gen_screen_references(reference), config, persistence, window_id,
                  window_timestamp_us);
}

} // namespace pmucal
