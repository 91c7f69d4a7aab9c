#include <doctest.h>

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sentinel/detector.hpp"
#include "sentinel/simulator.hpp"

using namespace sentinel;

namespace {

FeatureVector fv(double re, std::size_t t) { return FeatureVector{{cplx{re, 0.0}}, t}; }

std::vector<Decision> decisions_from(const std::vector<int>& flags) {
    std::vector<Decision> out;
    for (std::size_t t = 0; t < flags.size(); ++t)
        out.push_back(Decision{flags[t] ? Hypothesis::h1 : Hypothesis::h0,
                               static_cast<double>(flags[t]), t});
    return out;
}

}  // namespace

TEST_SUITE("detector") {

TEST_CASE("predictor kind names round-trip") {
    for (PredictorKind kind : {PredictorKind::ma, PredictorKind::ar, PredictorKind::kalman}) {
        const auto parsed = parse_predictor_kind(predictor_kind_name(kind));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == kind);
    }
    CHECK_FALSE(parse_predictor_kind("arma").has_value());
}

TEST_CASE("detector configuration validation") {
    DetectorConfig c;
    CHECK_NOTHROW(Detector{c});
    DetectorConfig bad_weights = c;
    bad_weights.weights.alpha1 = 0.5;  // exceeds alpha0
    CHECK_THROWS_AS(Detector{bad_weights}, std::invalid_argument);
    DetectorConfig full = c;
    full.test.gamma_mode = GammaMode::full;
    CHECK_THROWS_AS(Detector{full}, std::invalid_argument);
    DetectorConfig zero_window = c;
    zero_window.predictor = PredictorKind::ma;
    zero_window.ma_window = 0;
    CHECK_THROWS_AS(Detector{zero_window}, std::invalid_argument);
    DetectorConfig bad_v = c;
    bad_v.v_hat = -1.0;
    CHECK_THROWS_AS(Detector{bad_v}, std::invalid_argument);
    DetectorConfig bad_x = c;
    bad_x.x_init = -1.0;
    CHECK_THROWS_AS(Detector{bad_x}, std::invalid_argument);
}

TEST_CASE("moving-average detector has no opinion before data arrives") {
    DetectorConfig c;
    c.predictor = PredictorKind::ma;
    c.warmup_steps = 0;
    c.test.eta = -1.0;  // would flag anything once a statistic exists
    Detector d(c);
    const Decision first = d.step(fv(5.0, 0));
    CHECK(first.hypothesis == Hypothesis::h0);
    CHECK(first.statistic == 0.0);
    CHECK(first.t == 0);
    CHECK_FALSE(d.last_prediction().has_value());
    // One buffered measurement is enough for the next step.
    const Decision second = d.step(fv(5.0, 1));
    CHECK(d.last_prediction().has_value());
    CHECK(second.hypothesis == Hypothesis::h1);
}

TEST_CASE("warmup forces quiet decisions but keeps the statistic") {
    DetectorConfig c;
    c.predictor = PredictorKind::ar;
    c.warmup_steps = 5;
    c.test.eta = -1.0;  // every tested step would normally flag
    c.x_init = 1.0;
    Detector d(c);
    for (std::size_t t = 0; t < 5; ++t) {
        const Decision dec = d.step(fv(3.0, t));
        CHECK(dec.hypothesis == Hypothesis::h0);
        if (t == 0) {
            CHECK(dec.statistic == 0.0);  // no reference before the first update
        } else {
            CHECK(dec.statistic > 0.0);  // statistic computed and reported anyway
        }
        CHECK(d.last_weight() == doctest::Approx(c.weights.alpha0));
    }
    CHECK(d.step(fv(3.0, 5)).hypothesis == Hypothesis::h1);
    CHECK(d.last_weight() == doctest::Approx(c.weights.alpha1));
}

TEST_CASE("decision feedback selects the update weight") {
    DetectorConfig c;
    c.warmup_steps = 0;
    c.x_init = 1.0;
    c.test.eta = std::numeric_limits<double>::infinity();
    Detector quiet(c);
    quiet.step(fv(1.0, 0));
    quiet.step(fv(1.0, 1));
    CHECK(quiet.last_weight() == doctest::Approx(0.02));
    c.test.eta = -1.0;
    Detector loud(c);
    loud.step(fv(1.0, 0));  // cold start: no reference yet, nothing to flag
    CHECK(loud.last_weight() == doctest::Approx(0.02));
    loud.step(fv(1.0, 1));
    CHECK(loud.last_weight() == doctest::Approx(0.001));
}

TEST_CASE("the stream dimension is fixed by the first measurement") {
    DetectorConfig c;
    c.warmup_steps = 0;
    Detector d(c);
    d.step(FeatureVector{{cplx{1.0, 0.0}, cplx{2.0, 0.0}}, 0});
    CHECK_THROWS_AS(d.step(fv(1.0, 1)), std::invalid_argument);
    CHECK_THROWS_AS(d.step(FeatureVector{{}, 2}), std::invalid_argument);
    CHECK_THROWS_AS(d.step(FeatureVector{{cplx{std::nan(""), 0.0}, cplx{0.0, 0.0}}, 3}),
                    std::invalid_argument);
}

TEST_CASE("explicit variance floor scales degenerate statistics") {
    // Zero initial uncertainty and a zero prediction make the raw variance 0,
    // so the floor fully determines the test weighting.
    DetectorConfig c;
    c.predictor = PredictorKind::ar;
    c.warmup_steps = 0;
    c.x_init = 0.0;
    c.v_hat = 0.0;
    c.test.eps_var = 1e-6;
    Detector d(c);
    d.step(fv(0.0, 0));  // a zero measurement keeps the learned variance at zero
    const Decision dec = d.step(fv(1.0, 1));
    CHECK(dec.statistic == doctest::Approx(1e6).epsilon(1e-9));
}

TEST_CASE("adaptive variance floor bottoms out at its absolute minimum") {
    DetectorConfig c;
    c.predictor = PredictorKind::ar;
    c.warmup_steps = 0;
    c.x_init = 0.0;
    c.v_hat = 0.0;
    c.test.eps_var = 0.0;  // adaptive
    Detector d(c);
    d.step(fv(0.0, 0));  // a zero measurement keeps the learned variance at zero
    const Decision dec = d.step(fv(1.0, 1));
    CHECK(dec.statistic == doctest::Approx(1e12).epsilon(1e-9));
}

TEST_CASE("all predictors settle onto a constant stream") {
    for (PredictorKind kind : {PredictorKind::ma, PredictorKind::ar, PredictorKind::kalman}) {
        DetectorConfig c;
        c.predictor = kind;
        c.warmup_steps = 0;
        Detector d(c);
        for (std::size_t t = 0; t < 300; ++t) d.step(fv(2.0, t));
        REQUIRE(d.last_prediction().has_value());
        CHECK(std::abs(d.last_prediction()->y_hat[0] - cplx{2.0, 0.0}) < 0.25);
        CHECK(d.steps_processed() == 300);
    }
}

TEST_CASE("h1 runs compact into inclusive intervals") {
    const auto decisions = decisions_from({0, 1, 1, 0, 0, 1, 0, 0, 1, 1});
    const auto intervals = compact_intervals(decisions);
    REQUIRE(intervals.size() == 3);
    CHECK(intervals[0] == std::pair<std::size_t, std::size_t>{1, 2});
    CHECK(intervals[1] == std::pair<std::size_t, std::size_t>{5, 5});
    CHECK(intervals[2] == std::pair<std::size_t, std::size_t>{8, 9});
}

TEST_CASE("non-consecutive step indices break intervals") {
    std::vector<Decision> decisions = {Decision{Hypothesis::h1, 1.0, 3},
                                       Decision{Hypothesis::h1, 1.0, 5}};
    const auto intervals = compact_intervals(decisions);
    REQUIRE(intervals.size() == 2);
    CHECK(intervals[0] == std::pair<std::size_t, std::size_t>{3, 3});
    CHECK(intervals[1] == std::pair<std::size_t, std::size_t>{5, 5});
}

TEST_CASE("run_stream produces one decision per feature") {
    DetectorConfig c;
    c.warmup_steps = 0;
    std::vector<FeatureVector> stream;
    for (std::size_t t = 0; t < 10; ++t) stream.push_back(fv(1.0, t));
    const Timeline tl = run_stream(c, stream);
    REQUIRE(tl.decisions.size() == 10);
    for (std::size_t t = 0; t < 10; ++t) CHECK(tl.decisions[t].t == t);
    CHECK(tl.intervals.empty());  // eta defaults to infinity: nothing flags
}

TEST_CASE("evaluation scores flagged steps against labeled spans") {
    const auto decisions = decisions_from({0, 1, 1, 0, 0, 1, 0, 0, 1, 1});
    const std::vector<std::pair<std::size_t, std::size_t>> labels = {{1, 2}, {5, 6}};
    const Metrics m = evaluate(decisions, labels);
    CHECK(m.labeled_steps == 4);
    CHECK(m.unlabeled_steps == 6);
    CHECK(m.tpr == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(m.fpr == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    REQUIRE(m.latencies.size() == 2);
    CHECK(m.latencies[0] == std::size_t{0});
    CHECK(m.latencies[1] == std::size_t{0});
    CHECK(m.mean_latency == doctest::Approx(0.0));
}

TEST_CASE("grace steps leave the tpr denominator but latency still counts") {
    const auto decisions = decisions_from({0, 0, 1, 1, 0, 1, 0, 1, 1, 0});
    const std::vector<std::pair<std::size_t, std::size_t>> labels = {{1, 3}, {6, 8}};
    const Metrics plain = evaluate(decisions, labels, 0);
    CHECK(plain.tpr == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
    CHECK(plain.fpr == doctest::Approx(0.25).epsilon(1e-12));
    REQUIRE(plain.latencies.size() == 2);
    CHECK(plain.latencies[0] == std::size_t{1});
    CHECK(plain.latencies[1] == std::size_t{1});
    const Metrics graced = evaluate(decisions, labels, 1);
    CHECK(graced.labeled_steps == 4);
    CHECK(graced.tpr == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(graced.fpr == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(graced.latencies[0] == std::size_t{1});
    CHECK(graced.mean_latency == doctest::Approx(1.0));
}

TEST_CASE("undetected labels have no latency") {
    const auto decisions = decisions_from({0, 1, 0, 0});
    const std::vector<std::pair<std::size_t, std::size_t>> labels = {{1, 1}, {3, 3}};
    const Metrics m = evaluate(decisions, labels);
    REQUIRE(m.latencies.size() == 2);
    CHECK(m.latencies[0].has_value());
    CHECK_FALSE(m.latencies[1].has_value());
    CHECK(m.mean_latency == doctest::Approx(0.0));  // over the detected label only
}

TEST_CASE("evaluation rejects malformed label sets") {
    const auto decisions = decisions_from({0, 0, 0});
    CHECK_THROWS_AS(evaluate(decisions, std::vector<std::pair<std::size_t, std::size_t>>{{2, 1}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        evaluate(decisions,
                 std::vector<std::pair<std::size_t, std::size_t>>{{0, 3}, {3, 5}}),
        std::invalid_argument);
}

TEST_CASE("evaluation of empty inputs is well defined") {
    const Metrics none = evaluate({}, {});
    CHECK(none.tpr == 0.0);
    CHECK(none.fpr == 0.0);
    CHECK_FALSE(none.mean_latency.has_value());
    const auto decisions = decisions_from({1, 1});
    const Metrics unlabeled = evaluate(decisions, {});
    CHECK(unlabeled.fpr == doctest::Approx(1.0));
    CHECK(unlabeled.tpr == 0.0);  // no labeled steps at all
}

TEST_CASE("one-pass stream calibration equals the open-loop recipe") {
    Rng rng(777);
    std::vector<FeatureVector> stream;
    for (std::size_t t = 0; t < 220; ++t)
        stream.push_back(
            FeatureVector{{rng.complex_gaussian(1.0), rng.complex_gaussian(2.0)}, t});

    DetectorConfig c;
    c.predictor = PredictorKind::ar;
    c.warmup_steps = 20;
    const CalibrationResult result = calibrate_stream(c, stream, 1);

    // Open loop by hand: run unthresholded, record after the warmup, apply the
    // percentile law.
    DetectorConfig open = c;
    open.test.eta = std::numeric_limits<double>::infinity();
    Detector d(open);
    std::vector<double> recorded;
    for (std::size_t i = 0; i < stream.size(); ++i) {
        const Decision dec = d.step(stream[i]);
        if (i >= open.warmup_steps) recorded.push_back(dec.statistic);
    }
    CHECK(result.eta == calibrate_threshold(recorded));
    CHECK(result.recorded == 200);
    CHECK(result.passes == 1);
    CHECK(result.sample_low <= result.sample_high);
    CHECK(result.eta > result.sample_high);  // the margin sits above the p95
}

TEST_CASE("stream calibration validates its inputs") {
    DetectorConfig c;
    c.warmup_steps = 10;
    std::vector<FeatureVector> stream(10, fv(1.0, 0));  // does not outlast the warmup
    CHECK_THROWS_AS(calibrate_stream(c, stream, 1), std::invalid_argument);
    stream.push_back(fv(1.0, 10));
    CHECK_THROWS_AS(calibrate_stream(c, stream, 0), std::invalid_argument);
    CHECK_NOTHROW(calibrate_stream(c, stream, 1));
}

TEST_CASE("a perfectly predictable stream calibrates to the threshold floor") {
    DetectorConfig c;
    c.predictor = PredictorKind::ma;
    c.warmup_steps = 5;
    std::vector<FeatureVector> stream;
    for (std::size_t t = 0; t < 50; ++t) stream.push_back(fv(2.0, t));
    const CalibrationResult one = calibrate_stream(c, stream, 1);
    const CalibrationResult two = calibrate_stream(c, stream, 2);
    CHECK(one.eta == 1e-12);  // every recorded statistic is exactly zero
    CHECK(two.eta == 1e-12);  // the second pass flags nothing and changes nothing
    CHECK(two.recorded == 45);
    CHECK(two.passes == 2);
}

}  // TEST_SUITE
