#include "pmucal/refdb.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace pmucal {

namespace {

using nlohmann::json;

double require_number(const json& obj, const std::string& context, const std::string& field) {
    if (!obj.contains(field) || !obj[field].is_number()) {
        throw ParseError(context + "." + field + ": missing or non-numeric");
    }
    const double value = obj[field].get<double>();
    if (!std::isfinite(value)) {
        throw ParseError(context + "." + field + ": not finite");
    }
    return value;
}

std::string require_string(const json& obj, const std::string& context, const std::string& field) {
    if (!obj.contains(field) || !obj[field].is_string()) {
        throw ParseError(context + "." + field + ": missing or non-string");
    }
    return obj[field].get<std::string>();
}

LineReference parse_line(const json& obj, const std::string& context) {
    LineReference ref;
    ref.id = require_string(obj, context, "id");
    ref.r_ems = require_number(obj, context, "r_ems");
    ref.x_ems = require_number(obj, context, "x_ems");
    ref.b_ems = require_number(obj, context, "b_ems");
    const bool has_z0_re = obj.contains("z0_re");
    const bool has_z0_im = obj.contains("z0_im");
    if (has_z0_re != has_z0_im) {
        throw ParseError(context + ": z0_re and z0_im must appear together");
    }
    if (has_z0_re) {
        ref.z0 = Complex(require_number(obj, context, "z0_re"),
                         require_number(obj, context, "z0_im"));
    }
    if (obj.contains("b0")) {
        ref.b0 = require_number(obj, context, "b0");
    }
    ref.source = reference_source_from_string(require_string(obj, context, "source"));
    ref.updated_at = require_string(obj, context, "updated_at");
    try {
        ref.validate();
    } catch (const Error& e) {
        throw ParseError(context + ": " + e.what());
    }
    return ref;
}

GenReference parse_generator(const json& obj, const std::string& context) {
    GenReference ref;
    ref.id = require_string(obj, context, "id");
    ref.h_ref = require_number(obj, context, "h");
    ref.t_ref = require_number(obj, context, "t");
    ref.kd_ref = require_number(obj, context, "kd");
    ref.kr_ref = require_number(obj, context, "kr");
    ref.source = reference_source_from_string(require_string(obj, context, "source"));
    ref.updated_at = require_string(obj, context, "updated_at");
    try {
        ref.validate();
    } catch (const Error& e) {
        throw ParseError(context + ": " + e.what());
    }
    return ref;
}

json line_to_json(const LineReference& ref) {
    json obj{{"id", ref.id},
             {"r_ems", ref.r_ems},
             {"x_ems", ref.x_ems},
             {"b_ems", ref.b_ems},
             {"source", to_string(ref.source)},
             {"updated_at", ref.updated_at}};
    if (ref.z0.has_value()) {
        obj["z0_re"] = ref.z0->real();
        obj["z0_im"] = ref.z0->imag();
    }
    if (ref.b0.has_value()) {
        obj["b0"] = *ref.b0;
    }
    return obj;
}

json generator_to_json(const GenReference& ref) {
    return json{{"id", ref.id},       {"h", ref.h_ref},
                {"t", ref.t_ref},     {"kd", ref.kd_ref},
                {"kr", ref.kr_ref},   {"source", to_string(ref.source)},
                {"updated_at", ref.updated_at}};
}

} // namespace

std::string to_string(ReferenceSource source) {
    return source == ReferenceSource::EMS ? "EMS" : "PMS";
}

ReferenceSource reference_source_from_string(const std::string& text) {
    if (text == "EMS") {
        return ReferenceSource::EMS;
    }
    if (text == "PMS") {
        return ReferenceSource::PMS;
    }
    throw ParseError("unknown reference source '" + text + "' (expected EMS or PMS)");
}

void LineReference::validate() const {
    if (id.empty()) {
        throw Error("id must be non-empty");
    }
    if (r_ems < 0.0) {
        throw Error("r_ems: must be non-negative");
    }
    if (x_ems == 0.0) {
        throw Error("x_ems: must be nonzero");
    }
}

void GenReference::validate() const {
    if (id.empty()) {
        throw Error("id must be non-empty");
    }
    if (h_ref <= 0.0) {
        throw Error("h: must be positive");
    }
    if (kr_ref == 0.0) {
        throw Error("kr: must be nonzero");
    }
}

void PersistenceState::record(ScreeningWindow window, std::size_t n) {
    windows.push_back(std::move(window));
    while (windows.size() > n) {
        windows.pop_front();
    }
}

std::size_t PersistenceState::flagged_count() const {
    std::size_t count = 0;
    for (const auto& w : windows) {
        count += w.flagged ? 1 : 0;
    }
    return count;
}

const LineReference* ReferenceStore::find_line(const std::string& id) const {
    for (const auto& ref : lines) {
        if (ref.id == id) {
            return &ref;
        }
    }
    return nullptr;
}

const GenReference* ReferenceStore::find_generator(const std::string& id) const {
    for (const auto& ref : generators) {
        if (ref.id == id) {
            return &ref;
        }
    }
    return nullptr;
}

void ReferenceStore::validate() const {
    std::set<std::string> seen;
    for (const auto& ref : lines) {
        ref.validate();
        if (!seen.insert("line:" + ref.id).second) {
            throw DuplicateId("duplicate line id '" + ref.id + "'");
        }
    }
    for (const auto& ref : generators) {
        ref.validate();
        if (!seen.insert("gen:" + ref.id).second) {
            throw DuplicateId("duplicate generator id '" + ref.id + "'");
        }
    }
}

ReferenceStore load_store(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open reference store " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw ParseError(path.string() + ": top-level value must be an object");
    }

    ReferenceStore store;
    if (doc.contains("lines")) {
        if (!doc["lines"].is_array()) {
            throw ParseError(path.string() + ": lines must be an array");
        }
        std::size_t index = 0;
        for (const auto& entry : doc["lines"]) {
            store.lines.push_back(parse_line(entry, "lines[" + std::to_string(index++) + "]"));
        }
    }
    if (doc.contains("generators")) {
        if (!doc["generators"].is_array()) {
            throw ParseError(path.string() + ": generators must be an array");
        }
        std::size_t index = 0;
        for (const auto& entry : doc["generators"]) {
            store.generators.push_back(
                parse_generator(entry, "generators[" + std::to_string(index++) + "]"));
        }
    }
    if (doc.contains("screening_history")) {
        if (!doc["screening_history"].is_object()) {
            throw ParseError(path.string() + ": screening_history must be an object");
        }
        for (const auto& [asset, entries] : doc["screening_history"].items()) {
            PersistenceState state;
            std::size_t index = 0;
            for (const auto& entry : entries) {
                const std::string context =
                    "screening_history." + asset + "[" + std::to_string(index++) + "]";
                ScreeningWindow window;
                window.window_id = require_string(entry, context, "window_id");
                if (!entry.contains("flagged") || !entry["flagged"].is_boolean()) {
                    throw ParseError(context + ".flagged: missing or non-boolean");
                }
                window.flagged = entry["flagged"].get<bool>();
                if (!entry.contains("timestamp_us") ||
                    !entry["timestamp_us"].is_number_integer()) {
                    throw ParseError(context + ".timestamp_us: missing or non-integer");
                }
                window.timestamp_us = entry["timestamp_us"].get<std::int64_t>();
                state.windows.push_back(std::move(window));
            }
            store.screening_history.emplace(asset, std::move(state));
        }
    }
    store.validate();
    return store;
}

void save_store(const ReferenceStore& store, const std::filesystem::path& path) {
    store.validate();
    json doc;
    doc["lines"] = json::array();
    for (const auto& ref : store.lines) {
        doc["lines"].push_back(line_to_json(ref));
    }
    doc["generators"] = json::array();
    for (const auto& ref : store.generators) {
        doc["generators"].push_back(generator_to_json(ref));
    }
    if (!store.screening_history.empty()) {
        json history = json::object();
        for (const auto& [asset, state] : store.screening_history) {
            json entries = json::array();
            for (const auto& w : state.windows) {
                entries.push_back(json{{"window_id", w.window_id},
                                       {"flagged", w.flagged},
                                       {"timestamp_us", w.timestamp_us}});
            }
            history[asset] = std::move(entries);
        }
        doc["screening_history"] = std::move(history);
    }

    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write reference store " + path.string());
    }
    out << doc.dump(2) << '\n';
    if (!out) {
        throw IoError("failed writing reference store " + path.string());
    }
}

LineParameters expand_reference(const LineReference& ref) {
    ref.validate();
    const Complex z1(ref.r_ems, ref.x_ems);
    const Complex z0 = ref.z0.value_or(3.0 * z1);
    const double b1 = ref.b_ems;
    const double b0 = ref.b0.value_or(b1);
    return LineParameters::balanced(z1, z0, b1, b0);
}

} // namespace pmucal
