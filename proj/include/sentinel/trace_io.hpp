#pragma once

// Serialization: JSON-lines packet traces, calibration files, timelines,
// metrics, and the simulator config.  Every malformed input raises DataError
// with a message naming the offending file/line/field.
//
// Trace format (one JSON document per line):
//   {"type":"meta","k_sub":8,"window_s":0.2,"seed":1,"labels":[[600,680]]}
//   {"t":0.004,"rssi":-30.0,"csi":[[re,im], ...]}
//   {"t":0.012,"rssi":0.0,"rssi_valid":false,"csi":[...]}
// The meta line comes first; labels are inclusive bundle-window spans.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sentinel/detector.hpp"
#include "sentinel/features.hpp"
#include "sentinel/hypothesis.hpp"
#include "sentinel/simulator.hpp"

namespace sentinel {

// Invalid or inconsistent input data (as opposed to usage errors).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TraceMeta {
    std::size_t k_sub = 0;
    double window_s = 0.2;
    std::optional<std::uint64_t> seed;
    std::vector<std::pair<std::size_t, std::size_t>> labels;
};

struct Trace {
    TraceMeta meta;
    std::vector<Packet> packets;
};

void write_trace(std::ostream& out, const Trace& trace);
void write_trace_file(const std::string& path, const Trace& trace);
Trace read_trace(std::istream& in, const std::string& origin = "<stream>");
Trace read_trace_file(const std::string& path);

// One calibrated operating point: the feature/predictor/test combination and
// the threshold learned for it.
struct CalibrationEntry {
    FeatureSpec feature;
    PredictorKind predictor = PredictorKind::ar;
    TestMode test = TestMode::omnidirectional;
    bool align = true;
    double eta = 0.0;
    std::size_t k = 1;  // feature dimension the threshold was learned on
    std::size_t warmup = 500;
    std::size_t recorded = 500;
    double p_low = 5.0;
    double p_high = 95.0;
    double margin = 0.1;
    double sample_low = 0.0;   // measured p_low percentile of the recorded h
    double sample_high = 0.0;  // measured p_high percentile
};

nlohmann::ordered_json calibration_to_json(const CalibrationEntry& entry);
CalibrationEntry calibration_from_json(const nlohmann::json& j);
// Single entry -> flat object; multiple -> {"entries":[...]}.
void write_calibrations(std::ostream& out, std::span<const CalibrationEntry> entries);
std::vector<CalibrationEntry> read_calibrations(std::istream& in,
                                                const std::string& origin = "<stream>");
std::vector<CalibrationEntry> read_calibrations_file(const std::string& path);

nlohmann::ordered_json timeline_to_json(const Timeline& timeline);
Timeline timeline_from_json(const nlohmann::json& j);
nlohmann::ordered_json metrics_to_json(const Metrics& metrics);

// Labels from either a trace (.jsonl meta line) or a plain JSON document
// ([[s,e],...] or {"labels":[[s,e],...]}).
std::vector<std::pair<std::size_t, std::size_t>> read_labels_file(const std::string& path);

// Simulator run description, parsed strictly (unknown keys are errors;
// per-element variances accept a scalar broadcast or a K-sized array).
struct SimConfig {
    ChannelParams channel;
    AnomalyParams anomaly;
    SynthesisParams synth;
    double duration_s = 300.0;
};

// Baseline: 56-subcarrier channel near stationarity with two labeled anomaly
// bursts late enough to leave 1000 clean calibration windows.
SimConfig default_sim_config();
SimConfig sim_config_from_json(const nlohmann::json& j);
SimConfig read_sim_config_file(const std::string& path);

}  // namespace sentinel
