#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pmucal/phasor.hpp"

namespace pmucal {

enum class ReferenceSource { EMS, PMS };

std::string to_string(ReferenceSource source);
ReferenceSource reference_source_from_string(const std::string& text);

/// Positive-sequence line record as maintained in the utility databases.
struct LineReference {
    std::string id;
    double r_ems = 0.0; ///< p.u., >= 0
    double x_ems = 0.0; ///< p.u., != 0
    double b_ems = 0.0; ///< p.u.
    std::optional<Complex> z0; ///< defaults to 3*z1 when absent
    std::optional<double> b0;  ///< defaults to b1 when absent
    ReferenceSource source = ReferenceSource::EMS;
    std::string updated_at; ///< ISO-8601

    void validate() const;
};

struct GenReference {
    std::string id;
    double h_ref = 0.0;  ///< seconds, > 0
    double t_ref = 0.0;  ///< seconds
    double kd_ref = 0.0; ///< p.u.
    double kr_ref = 0.0; ///< p.u., != 0
    ReferenceSource source = ReferenceSource::EMS;
    std::string updated_at;

    void validate() const;
};

/// One screening window outcome kept for the consistent-discrepancy rule.
struct ScreeningWindow {
    std::string window_id;
    bool flagged = false;
    std::int64_t timestamp_us = 0;
};

/// Per-asset ring buffer of the last n screening outcomes.
struct PersistenceState {
    std::deque<ScreeningWindow> windows;

    /// Appends and trims to the policy length n.
    void record(ScreeningWindow window, std::size_t n);
    std::size_t flagged_count() const;
};

struct ReferenceStore {
    std::vector<LineReference> lines;
    std::vector<GenReference> generators;
    std::map<std::string, PersistenceState> screening_history;

    const LineReference* find_line(const std::string& id) const;
    const GenReference* find_generator(const std::string& id) const;
    void validate() const; ///< record invariants and id uniqueness
};

ReferenceStore load_store(const std::filesystem::path& path);
void save_store(const ReferenceStore& store, const std::filesystem::path& path);

/// Builds balanced 3-phase matrices from the positive/zero-sequence record.
LineParameters expand_reference(const LineReference& ref);

} // namespace pmucal
