#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pmucal/gen_estimator.hpp"
#include "pmucal/phasor.hpp"

namespace pmucal {

/// Exact header of the PMU snapshot CSV: the timestamp column followed by
/// magnitude/angle pairs for the four channels, phases a, b, c.
const std::string& pmu_csv_header();

/// Values are printed with 17 significant digits so the double round-trip is
/// lossless.
void write_pmu_csv(const std::filesystem::path& path,
                   std::span<const MeasurementSnapshot> snapshots);

/// Validates the header, column count, and strictly increasing timestamps.
std::vector<MeasurementSnapshot> read_pmu_csv(const std::filesystem::path& path);

/// Generator series CSV with header "t,w_delta,pe_delta"; t = k * step_h.
void write_gen_csv(const std::filesystem::path& path, const GenTimeSeries& series);

/// Recovers step_h from the time column and validates uniform spacing.
GenTimeSeries read_gen_csv(const std::filesystem::path& path);

} // namespace pmucal
