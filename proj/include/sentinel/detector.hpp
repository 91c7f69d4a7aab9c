#pragma once

// The streaming detector: predict -> test -> decide -> feed the decision back
// into the predictor update weight.  Flagged measurements are folded in with
// a much smaller weight so anomalies barely contaminate the learned baseline.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "sentinel/core.hpp"
#include "sentinel/hypothesis.hpp"
#include "sentinel/predictors.hpp"

namespace sentinel {

enum class PredictorKind { ma, ar, kalman };

std::string predictor_kind_name(PredictorKind kind);
std::optional<PredictorKind> parse_predictor_kind(std::string_view name);

struct DetectorConfig {
    PredictorKind predictor = PredictorKind::ar;
    WeightPolicy weights;
    TestConfig test;
    // Steps whose decisions are forced to H0 while the predictor settles; the
    // statistic is still computed and recorded.
    std::size_t warmup_steps = 500;
    std::size_t ma_window = 200;
    MaReference ma_reference = MaReference::most_recent_trusted;
    // Measurement-noise variance per element (Kalman filter; also the
    // additive term of the initial correlation for AR and Kalman).
    double v_hat = 2.0;
    // Initial estimation-error variance per element; absent = per-element
    // sample power of the first measurement.
    std::optional<double> x_init;
};

class Detector {
public:
    explicit Detector(const DetectorConfig& config);

    // Processes one measurement: predict, test, decide, update.  The first
    // measurement fixes the stream dimension; later mismatches throw.
    Decision step(const FeatureVector& y);

    void set_threshold(double eta) { config_.test.eta = eta; }
    double threshold() const noexcept { return config_.test.eta; }
    const DetectorConfig& config() const noexcept { return config_; }
    std::size_t steps_processed() const noexcept { return steps_; }
    // Update weight applied at the most recent step (alpha0 or alpha1).
    double last_weight() const noexcept { return last_weight_; }
    // Prediction the most recent step was tested against; absent while the
    // moving-average window is still empty.
    const std::optional<Prediction>& last_prediction() const noexcept { return last_prediction_; }

private:
    DetectorConfig config_;
    std::variant<std::monostate, MaState, ArState, KalmanState> state_;
    std::size_t steps_ = 0;
    double last_weight_ = 0.0;
    std::optional<Prediction> last_prediction_;
    // Running mean of predicted variances, for the adaptive eps_var floor.
    double var_sum_ = 0.0;
    std::size_t var_count_ = 0;

    void init_state(const FeatureVector& y);
    double current_eps() const;
};

struct Timeline {
    std::vector<Decision> decisions;
    // Maximal runs of H1 decisions at consecutive t, inclusive endpoints.
    std::vector<std::pair<std::size_t, std::size_t>> intervals;
};

std::vector<std::pair<std::size_t, std::size_t>> compact_intervals(
    std::span<const Decision> decisions);

// Runs a fresh detector over the whole stream.
Timeline run_stream(const DetectorConfig& config, std::span<const FeatureVector> stream);

struct CalibrationResult {
    double eta = 0.0;
    double sample_low = 0.0;   // p_low percentile of the last recorded pass
    double sample_high = 0.0;  // p_high percentile of the last recorded pass
    std::size_t recorded = 0;  // statistics recorded per pass (after warmup)
    std::size_t passes = 0;
};

// Offline threshold calibration over an anomaly-free stream.  The first pass
// runs a fresh detector with an infinite threshold and applies the percentile
// law (p_high + margin * (p_high - p_low)) to the statistics recorded after
// the warmup.  Each further pass reruns the stream against the previous
// threshold, so the recorded distribution includes the effect the threshold
// itself has on the predictor: flagged steps are folded in at alpha1, which
// on heavy-tailed features deflates the learned variance and inflates later
// statistics.  An open-loop threshold (passes = 1) understates that regime
// and can settle far above the intended false-alarm rate; the default two
// passes measure it directly and land on the conservative side.  The result
// is floored at 1e-12 so degenerate (constant) streams still yield a usable
// positive threshold.  Throws std::invalid_argument when passes == 0 or the
// stream does not outlast the warmup.
CalibrationResult calibrate_stream(const DetectorConfig& config,
                                   std::span<const FeatureVector> stream,
                                   std::size_t passes = 2, double p_low = 5.0,
                                   double p_high = 95.0, double margin_factor = 0.1);

struct Metrics {
    double tpr = 0.0;  // flagged fraction of labeled steps (grace steps excluded)
    double fpr = 0.0;  // flagged fraction of unlabeled steps
    // Per label: first flagged step inside the span minus span start; absent
    // when the span was never flagged (or never decided).
    std::vector<std::optional<std::size_t>> latencies;
    std::optional<double> mean_latency;  // over detected labels
    std::size_t labeled_steps = 0;
    std::size_t unlabeled_steps = 0;
};

// Scores decisions against labeled anomaly spans (inclusive, in t units,
// pairwise disjoint).  tpr_grace excludes the first tpr_grace steps of every
// span from the TPR denominator (detection latency allowance); FPR counts
// every unlabeled step.
Metrics evaluate(std::span<const Decision> decisions,
                 std::span<const std::pair<std::size_t, std::size_t>> labels,
                 std::size_t tpr_grace = 0);

}  // namespace sentinel
