#include "sentinel/trace_io.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace sentinel {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& origin, std::size_t line, const std::string& what) {
    throw DataError(origin + ":" + std::to_string(line) + ": " + what);
}

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
    throw DataError(origin + ": " + what);
}

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) { ok = true; break; }
        if (!ok) throw DataError(where + ": unknown key \"" + key + "\"");
    }
}

std::vector<std::pair<std::size_t, std::size_t>> spans_from_json(const json& j,
                                                                 const std::string& where) {
    if (!j.is_array()) throw DataError(where + ": expected an array of [start, end] pairs");
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    for (const auto& item : j) {
        if (!item.is_array() || item.size() != 2 || !item[0].is_number_unsigned() ||
            !item[1].is_number_unsigned())
            throw DataError(where + ": expected [start, end] with unsigned integers");
        const auto s = item[0].get<std::size_t>();
        const auto e = item[1].get<std::size_t>();
        if (s > e) throw DataError(where + ": span start exceeds end");
        spans.emplace_back(s, e);
    }
    return spans;
}

json spans_to_json(std::span<const std::pair<std::size_t, std::size_t>> spans) {
    json out = json::array();
    for (const auto& [s, e] : spans) out.push_back(json::array({s, e}));
    return out;
}

double finite_number(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j[key].is_number())
        throw DataError(where + ": missing or non-numeric \"" + std::string(key) + "\"");
    const double v = j[key].get<double>();
    if (!std::isfinite(v)) throw DataError(where + ": \"" + std::string(key) + "\" must be finite");
    return v;
}

}  // namespace

// ==== trace ==================================================================

void write_trace(std::ostream& out, const Trace& trace) {
    ordered_json meta;
    meta["type"] = "meta";
    meta["k_sub"] = trace.meta.k_sub;
    meta["window_s"] = trace.meta.window_s;
    if (trace.meta.seed) meta["seed"] = *trace.meta.seed;
    meta["labels"] = spans_to_json(trace.meta.labels);
    out << meta.dump() << '\n';

    for (const Packet& p : trace.packets) {
        ordered_json line;
        line["t"] = p.time;
        line["rssi"] = p.rssi;
        if (!p.rssi_valid) line["rssi_valid"] = false;
        json csi = json::array();
        for (const cplx& c : p.csi) csi.push_back(json::array({c.real(), c.imag()}));
        line["csi"] = std::move(csi);
        out << line.dump() << '\n';
    }
    if (!out) throw DataError("write_trace: stream write failed");
}

void write_trace_file(const std::string& path, const Trace& trace) {
    std::ofstream out(path);
    if (!out) throw DataError(path + ": cannot open for writing");
    write_trace(out, trace);
}

Trace read_trace(std::istream& in, const std::string& origin) {
    Trace trace;
    std::string line;
    std::size_t lineno = 0;
    bool have_meta = false;
    double prev_time = 0.0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            fail(origin, lineno, std::string("invalid JSON: ") + e.what());
        }
        if (!j.is_object()) fail(origin, lineno, "expected a JSON object");

        if (j.contains("type")) {
            if (j["type"] != "meta") fail(origin, lineno, "unknown line type");
            if (have_meta) fail(origin, lineno, "duplicate meta line");
            require_keys(j, {"type", "k_sub", "window_s", "seed", "labels"},
                         origin + ":" + std::to_string(lineno));
            if (!j.contains("k_sub") || !j["k_sub"].is_number_unsigned())
                fail(origin, lineno, "meta requires unsigned \"k_sub\"");
            trace.meta.k_sub = j["k_sub"].get<std::size_t>();
            if (trace.meta.k_sub == 0) fail(origin, lineno, "k_sub must be >= 1");
            trace.meta.window_s = finite_number(j, "window_s", origin + ":" + std::to_string(lineno));
            if (!(trace.meta.window_s > 0.0)) fail(origin, lineno, "window_s must be > 0");
            if (j.contains("seed")) {
                if (!j["seed"].is_number_unsigned()) fail(origin, lineno, "seed must be unsigned");
                trace.meta.seed = j["seed"].get<std::uint64_t>();
            }
            if (j.contains("labels"))
                trace.meta.labels = spans_from_json(j["labels"], origin + ":" + std::to_string(lineno));
            have_meta = true;
            continue;
        }

        if (!have_meta) fail(origin, lineno, "first line must be the meta line");
        require_keys(j, {"t", "rssi", "rssi_valid", "csi"}, origin + ":" + std::to_string(lineno));
        Packet p;
        p.time = finite_number(j, "t", origin + ":" + std::to_string(lineno));
        if (p.time < 0.0) fail(origin, lineno, "packet time must be >= 0");
        if (p.time < prev_time) fail(origin, lineno, "packet times must be nondecreasing");
        prev_time = p.time;
        p.rssi = finite_number(j, "rssi", origin + ":" + std::to_string(lineno));
        if (j.contains("rssi_valid")) {
            if (!j["rssi_valid"].is_boolean()) fail(origin, lineno, "rssi_valid must be boolean");
            p.rssi_valid = j["rssi_valid"].get<bool>();
        }
        if (!j.contains("csi") || !j["csi"].is_array()) fail(origin, lineno, "packet requires \"csi\" array");
        const auto& csi = j["csi"];
        if (csi.size() != trace.meta.k_sub)
            fail(origin, lineno, "csi length disagrees with meta k_sub");
        p.csi.reserve(csi.size());
        for (const auto& entry : csi) {
            if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() || !entry[1].is_number())
                fail(origin, lineno, "csi entries must be [re, im] number pairs");
            const double re = entry[0].get<double>();
            const double im = entry[1].get<double>();
            if (!std::isfinite(re) || !std::isfinite(im)) fail(origin, lineno, "csi values must be finite");
            p.csi.emplace_back(re, im);
        }
        trace.packets.push_back(std::move(p));
    }
    if (!have_meta) fail(origin, "missing meta line");
    return trace;
}

Trace read_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path + ": cannot open");
    return read_trace(in, path);
}

// ==== calibration ============================================================

ordered_json calibration_to_json(const CalibrationEntry& entry) {
    ordered_json j;
    j["feature"] = feature_kind_name(entry.feature.kind);
    j["bundles"] = entry.feature.bundles;
    j["normalized"] = entry.feature.normalized;
    j["predictor"] = predictor_kind_name(entry.predictor);
    j["test"] = entry.test == TestMode::omnidirectional ? "omni" : "uni";
    j["align"] = entry.align;
    j["eta"] = entry.eta;
    j["k"] = entry.k;
    j["warmup"] = entry.warmup;
    j["recorded"] = entry.recorded;
    j["p_low"] = entry.p_low;
    j["p_high"] = entry.p_high;
    j["margin"] = entry.margin;
    j["sample_low"] = entry.sample_low;
    j["sample_high"] = entry.sample_high;
    return j;
}

CalibrationEntry calibration_from_json(const json& j) {
    if (!j.is_object()) throw DataError("calibration: expected a JSON object");
    require_keys(j,
                 {"feature", "bundles", "normalized", "predictor", "test", "align", "eta", "k",
                  "warmup", "recorded", "p_low", "p_high", "margin", "sample_low", "sample_high"},
                 "calibration");
    CalibrationEntry e;
    if (!j.contains("feature") || !j["feature"].is_string())
        throw DataError("calibration: missing \"feature\"");
    const auto kind = parse_feature_kind(j["feature"].get<std::string>());
    if (!kind) throw DataError("calibration: unknown feature \"" + j["feature"].get<std::string>() + "\"");
    e.feature.kind = *kind;
    if (j.contains("bundles")) e.feature.bundles = j["bundles"].get<std::size_t>();
    if (e.feature.bundles == 0) throw DataError("calibration: bundles must be >= 1");
    if (j.contains("normalized")) e.feature.normalized = j["normalized"].get<bool>();
    if (!j.contains("predictor") || !j["predictor"].is_string())
        throw DataError("calibration: missing \"predictor\"");
    const auto pred = parse_predictor_kind(j["predictor"].get<std::string>());
    if (!pred)
        throw DataError("calibration: unknown predictor \"" + j["predictor"].get<std::string>() + "\"");
    e.predictor = *pred;
    if (!j.contains("test") || !j["test"].is_string()) throw DataError("calibration: missing \"test\"");
    const std::string test = j["test"].get<std::string>();
    if (test == "omni") e.test = TestMode::omnidirectional;
    else if (test == "uni") e.test = TestMode::unidirectional;
    else throw DataError("calibration: unknown test \"" + test + "\"");
    if (j.contains("align")) e.align = j["align"].get<bool>();
    e.eta = finite_number(j, "eta", "calibration");
    if (!(e.eta > 0.0)) throw DataError("calibration: eta must be > 0");
    if (j.contains("k")) e.k = j["k"].get<std::size_t>();
    if (e.k == 0) throw DataError("calibration: k must be >= 1");
    if (j.contains("warmup")) e.warmup = j["warmup"].get<std::size_t>();
    if (j.contains("recorded")) e.recorded = j["recorded"].get<std::size_t>();
    if (j.contains("p_low")) e.p_low = finite_number(j, "p_low", "calibration");
    if (j.contains("p_high")) e.p_high = finite_number(j, "p_high", "calibration");
    if (j.contains("margin")) e.margin = finite_number(j, "margin", "calibration");
    if (j.contains("sample_low")) e.sample_low = finite_number(j, "sample_low", "calibration");
    if (j.contains("sample_high")) e.sample_high = finite_number(j, "sample_high", "calibration");
    return e;
}

void write_calibrations(std::ostream& out, std::span<const CalibrationEntry> entries) {
    if (entries.empty()) throw DataError("write_calibrations: no entries");
    if (entries.size() == 1) {
        out << calibration_to_json(entries.front()).dump(2) << '\n';
    } else {
        ordered_json j;
        j["entries"] = json::array();
        for (const auto& e : entries) j["entries"].push_back(calibration_to_json(e));
        out << j.dump(2) << '\n';
    }
    if (!out) throw DataError("write_calibrations: stream write failed");
}

std::vector<CalibrationEntry> read_calibrations(std::istream& in, const std::string& origin) {
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        fail(origin, std::string("invalid JSON: ") + e.what());
    }
    std::vector<CalibrationEntry> entries;
    try {
        if (j.is_object() && j.contains("entries")) {
            if (!j["entries"].is_array()) throw DataError("\"entries\" must be an array");
            for (const auto& item : j["entries"]) entries.push_back(calibration_from_json(item));
        } else {
            entries.push_back(calibration_from_json(j));
        }
    } catch (const json::exception& e) {
        fail(origin, std::string("malformed calibration: ") + e.what());
    } catch (const DataError& e) {
        fail(origin, e.what());
    }
    if (entries.empty()) fail(origin, "calibration file contains no entries");
    return entries;
}

std::vector<CalibrationEntry> read_calibrations_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path + ": cannot open");
    return read_calibrations(in, path);
}

// ==== timeline / metrics =====================================================

ordered_json timeline_to_json(const Timeline& timeline) {
    ordered_json j;
    j["decisions"] = json::array();
    for (const Decision& d : timeline.decisions) {
        j["decisions"].push_back(ordered_json{
            {"t", d.t},
            {"h", d.statistic},
            {"d", d.hypothesis == Hypothesis::h1 ? 1 : 0},
        });
    }
    j["intervals"] = spans_to_json(timeline.intervals);
    return j;
}

Timeline timeline_from_json(const json& j) {
    if (!j.is_object() || !j.contains("decisions") || !j["decisions"].is_array())
        throw DataError("timeline: missing \"decisions\" array");
    Timeline t;
    try {
        for (const auto& item : j["decisions"]) {
            Decision d;
            if (!item.contains("t") || !item["t"].is_number_unsigned())
                throw DataError("timeline: decision requires unsigned \"t\"");
            d.t = item["t"].get<std::size_t>();
            d.statistic = item.contains("h") ? item["h"].get<double>() : 0.0;
            const int flag = item.contains("d") ? item["d"].get<int>() : 0;
            d.hypothesis = flag ? Hypothesis::h1 : Hypothesis::h0;
            t.decisions.push_back(d);
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("timeline: malformed decision: ") + e.what());
    }
    t.intervals = j.contains("intervals")
                      ? spans_from_json(j["intervals"], "timeline.intervals")
                      : compact_intervals(t.decisions);
    return t;
}

ordered_json metrics_to_json(const Metrics& metrics) {
    ordered_json j;
    j["tpr"] = metrics.tpr;
    j["fpr"] = metrics.fpr;
    j["latencies"] = json::array();
    for (const auto& lat : metrics.latencies) {
        if (lat) j["latencies"].push_back(*lat);
        else j["latencies"].push_back(nullptr);
    }
    if (metrics.mean_latency) j["mean_latency"] = *metrics.mean_latency;
    else j["mean_latency"] = nullptr;
    j["labeled_steps"] = metrics.labeled_steps;
    j["unlabeled_steps"] = metrics.unlabeled_steps;
    return j;
}

std::vector<std::pair<std::size_t, std::size_t>> read_labels_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path + ": cannot open");
    std::string first;
    while (std::getline(in, first) && first.empty()) {}
    json head;
    try {
        head = json::parse(first);
    } catch (const json::exception& e) {
        fail(path, std::string("invalid JSON: ") + e.what());
    }
    if (head.is_object() && head.contains("type") && head["type"] == "meta") {
        // A trace file: labels live on the meta line.
        if (!head.contains("labels")) return {};
        return spans_from_json(head["labels"], path);
    }
    // A plain JSON document (possibly multi-line): re-read the whole file.
    in.clear();
    in.seekg(0);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        fail(path, std::string("invalid JSON: ") + e.what());
    }
    if (j.is_array()) return spans_from_json(j, path);
    if (j.is_object() && j.contains("labels")) return spans_from_json(j["labels"], path);
    fail(path, "expected a trace, a [[start,end],...] array, or {\"labels\": [...]}");
}

// ==== simulator config =======================================================

namespace {

DiagCovariance cov_from_json(const json& j, const char* key, std::size_t k,
                             const std::string& where, double fallback) {
    if (!j.contains(key)) return DiagCovariance::constant(k, fallback);
    const auto& v = j[key];
    DiagCovariance cov;
    if (v.is_number()) {
        const double x = v.get<double>();
        if (!std::isfinite(x) || x < 0.0)
            throw DataError(where + "." + key + " must be finite and >= 0");
        cov = DiagCovariance::constant(k, x);
    } else if (v.is_array()) {
        if (v.size() != k)
            throw DataError(where + "." + key + " must have one entry per subcarrier");
        for (const auto& item : v) {
            if (!item.is_number()) throw DataError(where + "." + key + " entries must be numbers");
            const double x = item.get<double>();
            if (!std::isfinite(x) || x < 0.0)
                throw DataError(where + "." + key + " entries must be finite and >= 0");
            cov.variances.push_back(x);
        }
    } else {
        throw DataError(where + "." + key + " must be a number or an array");
    }
    return cov;
}

}  // namespace

SimConfig default_sim_config() {
    SimConfig c;
    const std::size_t k = c.synth.subcarriers;  // 56
    c.channel.a = 0.98;
    c.channel.u_cov = DiagCovariance::constant(k, 0.0396);     // stationary |x|^2 = 1
    c.channel.v_cov = DiagCovariance::constant(k, 0.1);
    c.channel.x_init_cov = DiagCovariance::constant(k, 1.0);   // start at stationarity
    c.channel.phase_noise = true;
    c.anomaly.gamma = 1;
    c.anomaly.y_cov = DiagCovariance::constant(k, 11.0);       // 10x stationary measurement var
    c.anomaly.windows = {{1100, 1160}, {1300, 1360}};
    c.duration_s = 300.0;  // 1500 windows: 1000 clean calibration windows first
    return c;
}

SimConfig sim_config_from_json(const json& j) {
    if (!j.is_object()) throw DataError("config: expected a JSON object");
    require_keys(j, {"duration_s", "channel", "anomaly", "synth"}, "config");
    SimConfig c = default_sim_config();

    const json synth = j.contains("synth") ? j["synth"] : json::object();
    require_keys(synth,
                 {"packets_per_bundle", "bundle_window_s", "subcarriers", "rssi_offset_db",
                  "rssi_quantum_db", "power_randomization"},
                 "config.synth");
    if (synth.contains("packets_per_bundle"))
        c.synth.packets_per_bundle = synth["packets_per_bundle"].get<std::size_t>();
    if (synth.contains("bundle_window_s"))
        c.synth.bundle_window_s = finite_number(synth, "bundle_window_s", "config.synth");
    if (synth.contains("subcarriers")) c.synth.subcarriers = synth["subcarriers"].get<std::size_t>();
    if (synth.contains("rssi_offset_db"))
        c.synth.rssi_offset_db = finite_number(synth, "rssi_offset_db", "config.synth");
    if (synth.contains("rssi_quantum_db"))
        c.synth.rssi_quantum_db = finite_number(synth, "rssi_quantum_db", "config.synth");
    if (synth.contains("power_randomization")) {
        const auto& pr = synth["power_randomization"];
        require_keys(pr, {"min_gain", "max_gain"}, "config.synth.power_randomization");
        c.synth.power_gain = std::make_pair(finite_number(pr, "min_gain", "config.synth.power_randomization"),
                                            finite_number(pr, "max_gain", "config.synth.power_randomization"));
    }
    const std::size_t k = c.synth.subcarriers;

    const json channel = j.contains("channel") ? j["channel"] : json::object();
    require_keys(channel, {"a", "u_var", "v_var", "x_init_var", "phase_noise"}, "config.channel");
    if (channel.contains("a")) c.channel.a = finite_number(channel, "a", "config.channel");
    c.channel.u_cov = cov_from_json(channel, "u_var", k, "config.channel", 0.0396);
    c.channel.v_cov = cov_from_json(channel, "v_var", k, "config.channel", 0.1);
    if (channel.contains("x_init_var")) {
        c.channel.x_init_cov = cov_from_json(channel, "x_init_var", k, "config.channel", 1.0);
    } else if (std::abs(c.channel.a) < 1.0) {
        // default: start at the stationary state variance u / (1 - a^2)
        c.channel.x_init_cov.variances.clear();
        for (double u : c.channel.u_cov.variances)
            c.channel.x_init_cov.variances.push_back(u / (1.0 - c.channel.a * c.channel.a));
    } else {
        c.channel.x_init_cov = DiagCovariance::constant(k, 0.0);  // validate() rejects |a| >= 1
    }
    if (channel.contains("phase_noise")) c.channel.phase_noise = channel["phase_noise"].get<bool>();

    const json anomaly = j.contains("anomaly") ? j["anomaly"] : json::object();
    require_keys(anomaly, {"gamma", "y_var", "schedule"}, "config.anomaly");
    if (anomaly.contains("gamma")) c.anomaly.gamma = anomaly["gamma"].get<int>();
    c.anomaly.y_cov = cov_from_json(anomaly, "y_var", k, "config.anomaly", 11.0);
    if (anomaly.contains("schedule"))
        c.anomaly.windows = spans_from_json(anomaly["schedule"], "config.anomaly.schedule");

    if (j.contains("duration_s")) c.duration_s = finite_number(j, "duration_s", "config");
    if (!(c.duration_s > 0.0)) throw DataError("config.duration_s must be > 0");

    try {
        c.channel.validate();
        c.synth.validate();
        c.anomaly.validate(k);
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("config.") + e.what());
    }
    return c;
}

SimConfig read_sim_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path + ": cannot open");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        fail(path, std::string("invalid JSON: ") + e.what());
    }
    try {
        return sim_config_from_json(j);
    } catch (const DataError& e) {
        fail(path, e.what());
    }
}

}  // namespace sentinel
