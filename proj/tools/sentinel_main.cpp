// sentinel: streaming anomaly detection for complex-valued feature streams.
//
// Subcommands:
//   simulate   synthesize a packet trace from the Gauss-Markov channel model
//   calibrate  learn detection thresholds on an anomaly-free trace
//   detect     run calibrated detectors over a trace, emit a decision timeline
//   eval       score a timeline against labeled anomaly spans
//   bench      per-measurement latency of predict + test + update
//
// Exit codes: 0 success, 1 usage error, 2 invalid or inconsistent data.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sentinel/bench.hpp"
#include "sentinel/detector.hpp"
#include "sentinel/features.hpp"
#include "sentinel/hypothesis.hpp"
#include "sentinel/simulator.hpp"
#include "sentinel/trace_io.hpp"

namespace {

using namespace sentinel;
using nlohmann::json;
using nlohmann::ordered_json;

// Fewest post-warmup statistics accepted for threshold percentiles.
constexpr std::size_t kMinCalibrationSamples = 500;

// Writes to the path, or to stdout when the path is empty.
void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw DataError(path + ": cannot open for writing");
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
    if (!out) throw DataError(path + ": write failed");
}

std::vector<FeatureVector> build_feature_stream(const Trace& trace, const FeatureSpec& spec) {
    const std::vector<Bundle> bundles = bundle_packets(trace.packets, trace.meta.window_s);
    return feature_stream(bundles, spec);
}

DetectorConfig detector_config_for(const CalibrationEntry& entry) {
    DetectorConfig config;
    config.predictor = entry.predictor;
    config.test.mode = entry.test;
    config.test.align = entry.align;
    config.test.eta = entry.eta;
    config.warmup_steps = entry.warmup;
    return config;
}

struct Options {
    std::string config_path;
    std::string out_path;
    std::string trace_path;
    std::string calib_path;
    std::string timeline_path;
    std::string labels_path;
    std::string csv_path;
    std::string feature;
    std::string predictor = "ar";
    std::string test = "omni";
    std::size_t bundles = 1;
    bool normalized = false;
    bool all_features = false;
    std::uint64_t seed = 1;
    std::size_t grace = 0;
    std::size_t bench_k = 504;
    std::size_t bench_iters = 10000;
};

struct CalibrationRequest {
    FeatureSpec feature;
    TestMode test = TestMode::omnidirectional;
};

// Single mode: the flags as given.  Batch mode (--all-features): the full
// feature x {omni, uni} x {B=1, B=10} grid; RSSI features are dropped under
// --normalized because normalization destroys the power they measure.
std::vector<CalibrationRequest> requested_calibrations(const Options& opt) {
    std::vector<CalibrationRequest> requests;
    const TestMode flag_mode =
        opt.test == "uni" ? TestMode::unidirectional : TestMode::omnidirectional;
    if (opt.all_features) {
        for (FeatureKind kind : kAllFeatureKinds) {
            if (opt.normalized && feature_uses_rssi(kind)) continue;
            for (TestMode mode : {TestMode::omnidirectional, TestMode::unidirectional}) {
                for (std::size_t b : {std::size_t{1}, std::size_t{10}}) {
                    CalibrationRequest r;
                    r.feature = FeatureSpec{kind, b, opt.normalized && !feature_uses_rssi(kind)};
                    r.test = mode;
                    requests.push_back(r);
                }
            }
        }
    } else {
        const auto kind = parse_feature_kind(opt.feature);
        if (!kind) throw DataError("unknown feature \"" + opt.feature + "\"");
        CalibrationRequest r;
        r.feature = FeatureSpec{*kind, opt.bundles, opt.normalized && !feature_uses_rssi(*kind)};
        r.test = flag_mode;
        requests.push_back(r);
    }
    return requests;
}

// ==== subcommands ============================================================

int cmd_simulate(const Options& opt) {
    const SimConfig config =
        opt.config_path.empty() ? default_sim_config() : read_sim_config_file(opt.config_path);
    SynthTrace synth = synthesize_trace(config.channel, config.anomaly, config.synth,
                                        config.duration_s, opt.seed);
    Trace trace;
    trace.meta.k_sub = config.synth.subcarriers;
    trace.meta.window_s = config.synth.bundle_window_s;
    trace.meta.seed = opt.seed;
    trace.meta.labels = synth.labels;
    trace.packets = std::move(synth.packets);
    write_trace_file(opt.out_path, trace);
    std::cerr << "wrote " << trace.packets.size() << " packets (" << synth.windows
              << " windows, " << trace.meta.labels.size() << " labeled spans) to "
              << opt.out_path << "\n";
    return 0;
}

int cmd_calibrate(const Options& opt) {
    const Trace trace = read_trace_file(opt.trace_path);
    const auto predictor = parse_predictor_kind(opt.predictor);
    if (!predictor) throw DataError("unknown predictor \"" + opt.predictor + "\"");

    // The same feature stream serves both tests in batch mode; cache it.
    std::map<std::tuple<FeatureKind, std::size_t, bool>, std::vector<FeatureVector>> streams;
    auto stream_for = [&](const FeatureSpec& spec) -> const std::vector<FeatureVector>& {
        const auto key = std::make_tuple(spec.kind, spec.bundles, spec.normalized);
        auto it = streams.find(key);
        if (it == streams.end()) it = streams.emplace(key, build_feature_stream(trace, spec)).first;
        return it->second;
    };

    std::vector<CalibrationEntry> entries;
    for (const CalibrationRequest& request : requested_calibrations(opt)) {
        const std::vector<FeatureVector>& stream = stream_for(request.feature);
        CalibrationEntry entry;
        entry.feature = request.feature;
        entry.predictor = *predictor;
        entry.test = request.test;
        // Require a sane minimum of post-warmup statistics for the percentiles.
        const std::size_t need = entry.warmup + kMinCalibrationSamples;
        if (stream.size() < need)
            throw DataError(opt.trace_path + ": feature " + feature_kind_name(request.feature.kind) +
                            " yields " + std::to_string(stream.size()) +
                            " steps; calibration needs " + std::to_string(need));

        // Closed-loop calibration over everything after the warmup: the second
        // pass records the statistics with the first-pass threshold enforced,
        // which is the regime `detect` will run in.
        const CalibrationResult result =
            calibrate_stream(detector_config_for(entry), stream, 2, entry.p_low, entry.p_high,
                             entry.margin);
        entry.eta = result.eta;
        entry.sample_low = result.sample_low;
        entry.sample_high = result.sample_high;
        entry.recorded = result.recorded;
        entry.k = stream.front().size();
        entries.push_back(entry);
    }

    std::ostringstream buffer;
    write_calibrations(buffer, entries);
    emit(opt.out_path, buffer.str());
    if (!opt.out_path.empty())
        std::cerr << "wrote " << entries.size() << " calibration entr"
                  << (entries.size() == 1 ? "y" : "ies") << " to " << opt.out_path << "\n";
    return 0;
}

ordered_json detect_one(const Trace& trace, const CalibrationEntry& entry,
                        const std::string& trace_path) {
    const std::vector<FeatureVector> stream = build_feature_stream(trace, entry.feature);
    if (!stream.empty() && stream.front().size() != entry.k)
        throw DataError(trace_path + ": feature dimension " + std::to_string(stream.front().size()) +
                        " does not match calibrated dimension " + std::to_string(entry.k) +
                        " for " + feature_kind_name(entry.feature.kind) +
                        " (was the calibration made on a different trace layout?)");

    // An empty feature stream (e.g. a packetless trace) yields an empty timeline.
    const Timeline timeline = run_stream(detector_config_for(entry), stream);
    ordered_json j;
    j["feature"] = feature_kind_name(entry.feature.kind);
    j["bundles"] = entry.feature.bundles;
    j["normalized"] = entry.feature.normalized;
    j["predictor"] = predictor_kind_name(entry.predictor);
    j["test"] = entry.test == TestMode::omnidirectional ? "omni" : "uni";
    j["eta"] = entry.eta;
    j["k"] = entry.k;
    const ordered_json body = timeline_to_json(timeline);
    j["decisions"] = body["decisions"];
    j["intervals"] = body["intervals"];
    return j;
}

void append_csv(std::ostream& out, const ordered_json& result) {
    const std::string feature = result["feature"].get<std::string>();
    for (const auto& d : result["decisions"]) {
        out << feature << ',' << d["t"].get<std::size_t>() << ',' << d["h"].get<double>() << ','
            << d["d"].get<int>() << '\n';
    }
}

int cmd_detect(const Options& opt) {
    const Trace trace = read_trace_file(opt.trace_path);
    const std::vector<CalibrationEntry> entries = read_calibrations_file(opt.calib_path);

    std::vector<ordered_json> results;
    results.reserve(entries.size());
    for (const CalibrationEntry& entry : entries)
        results.push_back(detect_one(trace, entry, opt.trace_path));

    ordered_json out;
    if (results.size() == 1) {
        out = results.front();
    } else {
        out["results"] = json::array();
        for (auto& r : results) out["results"].push_back(std::move(r));
    }
    emit(opt.out_path, out.dump(2));

    if (!opt.csv_path.empty()) {
        std::ofstream csv(opt.csv_path);
        if (!csv) throw DataError(opt.csv_path + ": cannot open for writing");
        csv << "feature,t,h,decision\n";
        for (const auto& r : results) append_csv(csv, r);
        if (!csv) throw DataError(opt.csv_path + ": write failed");
    }
    if (!opt.out_path.empty())
        std::cerr << "wrote " << results.size() << " timeline"
                  << (results.size() == 1 ? "" : "s") << " to " << opt.out_path << "\n";
    return 0;
}

Metrics eval_one(const json& timeline_json,
                 const std::vector<std::pair<std::size_t, std::size_t>>& labels,
                 std::size_t grace) {
    const Timeline timeline = timeline_from_json(timeline_json);
    return evaluate(timeline.decisions, labels, grace);
}

int cmd_eval(const Options& opt) {
    std::ifstream in(opt.timeline_path);
    if (!in) throw DataError(opt.timeline_path + ": cannot open");
    json timelines;
    try {
        timelines = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(opt.timeline_path + ": invalid JSON: " + e.what());
    }
    const auto labels = read_labels_file(opt.labels_path);

    ordered_json out;
    if (timelines.is_object() && timelines.contains("results")) {
        out["results"] = json::array();
        for (const auto& r : timelines["results"]) {
            ordered_json entry;
            for (const char* key : {"feature", "bundles", "normalized", "predictor", "test", "eta"})
                if (r.contains(key)) entry[key] = r[key];
            entry["metrics"] = metrics_to_json(eval_one(r, labels, opt.grace));
            out["results"].push_back(std::move(entry));
        }
    } else {
        out = metrics_to_json(eval_one(timelines, labels, opt.grace));
    }
    emit(opt.out_path, out.dump(2));
    return 0;
}

int cmd_bench(const Options& opt) {
    BenchConfig config;
    const auto predictor = parse_predictor_kind(opt.predictor);
    if (!predictor) throw DataError("unknown predictor \"" + opt.predictor + "\"");
    config.predictor = *predictor;
    config.test = opt.test == "uni" ? TestMode::unidirectional : TestMode::omnidirectional;
    config.k = opt.bench_k;
    config.iters = opt.bench_iters;
    config.seed = opt.seed;
    const BenchResult result = run_bench(config);
    ordered_json j;
    j["predictor"] = opt.predictor;
    j["test"] = opt.test;
    j["k"] = result.k;
    j["iters"] = result.iters;
    j["mean_ns"] = result.mean_ns;
    j["median_ns"] = result.median_ns;
    j["p95_ns"] = result.p95_ns;
    emit(opt.out_path, j.dump(2));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    Options opt;
    CLI::App app{"Streaming anomaly detection for complex-valued feature streams"};
    app.require_subcommand(1);

    const std::vector<std::string> feature_names = [] {
        std::vector<std::string> names;
        for (FeatureKind kind : kAllFeatureKinds) names.push_back(feature_kind_name(kind));
        return names;
    }();

    auto add_seed = [&](CLI::App* sub) {
        sub->add_option("--seed", opt.seed, "RNG seed (env: SENTINEL_SEED)")
            ->envname("SENTINEL_SEED");
    };
    auto add_feature_flags = [&](CLI::App* sub) {
        sub->add_option("--feature", opt.feature, "feature to extract")
            ->check(CLI::IsMember(feature_names));
        sub->add_option("--bundles", opt.bundles, "windows pooled per feature (default 1)")
            ->check(CLI::PositiveNumber);
        sub->add_flag("--normalized", opt.normalized,
                      "unit-normalize CSI before amplitude extraction");
        sub->add_flag("--all-features", opt.all_features, "run every feature kind");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "synthesize a packet trace");
    simulate->add_option("--config", opt.config_path, "simulation config (JSON)")
        ->check(CLI::ExistingFile);
    simulate->add_option("--out", opt.out_path, "output trace path (JSON lines)")->required();
    add_seed(simulate);

    CLI::App* calibrate = app.add_subcommand("calibrate", "learn thresholds on a clean trace");
    calibrate->add_option("--trace", opt.trace_path, "input trace")->required()
        ->check(CLI::ExistingFile);
    calibrate->add_option("--predictor", opt.predictor, "ma | ar | kalman")
        ->check(CLI::IsMember({"ma", "ar", "kalman"}));
    calibrate->add_option("--test", opt.test, "omni | uni")->check(CLI::IsMember({"omni", "uni"}));
    add_feature_flags(calibrate);
    calibrate->add_option("--out", opt.out_path, "calibration output (default: stdout)");

    CLI::App* detect = app.add_subcommand("detect", "run calibrated detectors over a trace");
    detect->add_option("--trace", opt.trace_path, "input trace")->required()
        ->check(CLI::ExistingFile);
    detect->add_option("--calib", opt.calib_path, "calibration file from `calibrate`")
        ->required()->check(CLI::ExistingFile);
    detect->add_option("--out", opt.out_path, "timeline output (default: stdout)");
    detect->add_option("--csv", opt.csv_path, "also write decisions as CSV");

    CLI::App* eval = app.add_subcommand("eval", "score a timeline against labels");
    eval->add_option("--timeline", opt.timeline_path, "timeline file from `detect`")
        ->required()->check(CLI::ExistingFile);
    eval->add_option("--labels", opt.labels_path,
                     "labels: a trace, [[start,end],...], or {\"labels\": [...]}")
        ->required()->check(CLI::ExistingFile);
    eval->add_option("--grace", opt.grace,
                     "label steps exempt from the TPR denominator (latency allowance)");
    eval->add_option("--out", opt.out_path, "metrics output (default: stdout)");

    CLI::App* bench = app.add_subcommand("bench", "time predict + test + update per step");
    bench->add_option("--predictor", opt.predictor, "ma | ar | kalman")
        ->check(CLI::IsMember({"ma", "ar", "kalman"}));
    bench->add_option("--test", opt.test, "omni | uni")->check(CLI::IsMember({"omni", "uni"}));
    bench->add_option("--k", opt.bench_k, "stream dimension")->check(CLI::PositiveNumber);
    bench->add_option("--iters", opt.bench_iters, "timed iterations")->check(CLI::PositiveNumber);
    bench->add_option("--out", opt.out_path, "result output (default: stdout)");
    add_seed(bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(simulate)) return cmd_simulate(opt);
        if (app.got_subcommand(calibrate)) {
            if (!opt.all_features && opt.feature.empty()) {
                std::cerr << "calibrate: provide --feature or --all-features\n";
                return 1;
            }
            return cmd_calibrate(opt);
        }
        if (app.got_subcommand(detect)) return cmd_detect(opt);
        if (app.got_subcommand(eval)) return cmd_eval(opt);
        if (app.got_subcommand(bench)) return cmd_bench(opt);
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
