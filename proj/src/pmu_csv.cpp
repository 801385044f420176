#include "pmucal/pmu_csv.hpp"

#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pmucal {

namespace {

std::string format_value(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

double parse_double(const std::string& field, const std::string& context) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto result = std::from_chars(begin, end, value);
    if (result.ec != std::errc{} || result.ptr != end || !std::isfinite(value)) {
        throw ParseError(context + ": bad numeric field '" + field + "'");
    }
    return value;
}

std::int64_t parse_int(const std::string& field, const std::string& context) {
    std::int64_t value = 0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto result = std::from_chars(begin, end, value);
    if (result.ec != std::errc{} || result.ptr != end) {
        throw ParseError(context + ": bad integer field '" + field + "'");
    }
    return value;
}

void append_set(std::string& out, const ThreePhaseSet& set) {
    for (const Phasor* ph : {&set.a, &set.b, &set.c}) {
        out += ',';
        out += format_value(ph->magnitude());
        out += ',';
        out += format_value(ph->angle());
    }
}

ThreePhaseSet read_set(const std::vector<std::string>& fields, std::size_t offset,
                       const std::string& context) {
    auto phasor = [&](std::size_t i) {
        return Phasor(parse_double(fields[offset + 2 * i], context),
                      parse_double(fields[offset + 2 * i + 1], context));
    };
    return ThreePhaseSet{phasor(0), phasor(1), phasor(2)};
}

} // namespace

const std::string& pmu_csv_header() {
    static const std::string header = [] {
        std::string h = "timestamp_us";
        for (const char* channel : {"vs", "vr", "is", "ir"}) {
            for (const char* phase : {"a", "b", "c"}) {
                h += ',';
                h += channel;
                h += '_';
                h += phase;
                h += "_mag,";
                h += channel;
                h += '_';
                h += phase;
                h += "_ang";
            }
        }
        return h;
    }();
    return header;
}

void write_pmu_csv(const std::filesystem::path& path,
                   std::span<const MeasurementSnapshot> snapshots) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << pmu_csv_header() << '\n';
    for (const auto& snap : snapshots) {
        std::string line = std::to_string(snap.timestamp_us);
        append_set(line, snap.v_s);
        append_set(line, snap.v_r);
        append_set(line, snap.i_s);
        append_set(line, snap.i_r);
        out << line << '\n';
    }
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

std::vector<MeasurementSnapshot> read_pmu_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != pmu_csv_header()) {
        throw ParseError(path.string() + ": unexpected header");
    }

    std::vector<MeasurementSnapshot> snapshots;
    std::size_t line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) {
            continue;
        }
        const std::string context = path.string() + ":" + std::to_string(line_number);
        const auto fields = split_line(line);
        if (fields.size() != 25) {
            throw ParseError(context + ": expected 25 fields, found " +
                             std::to_string(fields.size()));
        }
        MeasurementSnapshot snap;
        snap.timestamp_us = parse_int(fields[0], context);
        try {
            snap.v_s = read_set(fields, 1, context);
            snap.v_r = read_set(fields, 7, context);
            snap.i_s = read_set(fields, 13, context);
            snap.i_r = read_set(fields, 19, context);
        } catch (const Error& e) {
            throw ParseError(context + ": " + e.what());
        }
        if (!snapshots.empty() && snap.timestamp_us <= snapshots.back().timestamp_us) {
            throw ParseError(context + ": timestamps must be strictly increasing");
        }
        snapshots.push_back(snap);
    }
    return snapshots;
}

void write_gen_csv(const std::filesystem::path& path, const GenTimeSeries& series) {
    series.validate();
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << "t,w_delta,pe_delta\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        out << format_value(static_cast<double>(k) * series.step_h) << ','
            << format_value(series.w_delta[k]) << ',' << format_value(series.pe_delta[k])
            << '\n';
    }
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

GenTimeSeries read_gen_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line != "t,w_delta,pe_delta") {
        throw ParseError(path.string() + ": unexpected header");
    }

    std::vector<double> t, w, u;
    std::size_t line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) {
            continue;
        }
        const std::string context = path.string() + ":" + std::to_string(line_number);
        const auto fields = split_line(line);
        if (fields.size() != 3) {
            throw ParseError(context + ": expected 3 fields");
        }
        t.push_back(parse_double(fields[0], context));
        w.push_back(parse_double(fields[1], context));
        u.push_back(parse_double(fields[2], context));
    }
    if (t.size() < 10) {
        throw TooShortSeries(path.string() + ": needs at least 10 samples");
    }

    const double step = t[1] - t[0];
    if (step <= 0.0) {
        throw ParseError(path.string() + ": time column must increase");
    }
    for (std::size_t k = 1; k < t.size(); ++k) {
        const double gap = t[k] - t[k - 1];
        if (std::abs(gap - step) > 1e-9 * std::max(step, 1.0)) {
            throw ParseError(path.string() + ": non-uniform sampling at row " +
                             std::to_string(k + 1));
        }
    }

    GenTimeSeries series;
    series.step_h = step;
    series.w_delta = std::move(w);
    series.pe_delta = std::move(u);
    series.validate();
    return series;
}

} // namespace pmucal
