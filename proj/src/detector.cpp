#include "sentinel/detector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sentinel {

std::string predictor_kind_name(PredictorKind kind) {
    switch (kind) {
        case PredictorKind::ma: return "ma";
        case PredictorKind::ar: return "ar";
        case PredictorKind::kalman: return "kalman";
    }
    return "unknown";
}

std::optional<PredictorKind> parse_predictor_kind(std::string_view name) {
    if (name == "ma") return PredictorKind::ma;
    if (name == "ar") return PredictorKind::ar;
    if (name == "kalman") return PredictorKind::kalman;
    return std::nullopt;
}

Detector::Detector(const DetectorConfig& config) : config_(config) {
    if (!config_.weights.is_valid())
        throw std::invalid_argument("Detector: invalid weight policy");
    if (config_.test.gamma_mode != GammaMode::diagonal)
        throw std::invalid_argument(
            "Detector: predictors provide diagonal uncertainties only; full-matrix "
            "weighting is not available in the streaming pipeline");
    if (config_.ma_window == 0) throw std::invalid_argument("Detector: ma_window must be >= 1");
    if (!(config_.v_hat >= 0.0) || !std::isfinite(config_.v_hat))
        throw std::invalid_argument("Detector: v_hat must be finite and >= 0");
    if (config_.x_init && (!(*config_.x_init >= 0.0) || !std::isfinite(*config_.x_init)))
        throw std::invalid_argument("Detector: x_init must be finite and >= 0");
}

void Detector::init_state(const FeatureVector& y) {
    const std::size_t k = y.size();
    // Default initial error variance: per-element sample power of the first
    // measurement.
    DiagCovariance x_init;
    x_init.variances.resize(k);
    for (std::size_t i = 0; i < k; ++i)
        x_init.variances[i] = config_.x_init ? *config_.x_init : std::norm(y.values[i]);
    const DiagCovariance v_hat = DiagCovariance::constant(k, config_.v_hat);

    switch (config_.predictor) {
        case PredictorKind::ma:
            state_ = ma_init(config_.ma_window, config_.weights.alpha0, config_.ma_reference);
            break;
        case PredictorKind::ar: {
            DiagCovariance init_corr;
            init_corr.variances.resize(k);
            for (std::size_t i = 0; i < k; ++i)
                init_corr.variances[i] = x_init.variances[i] + v_hat.variances[i];
            state_ = ar_init(k, init_corr);
            break;
        }
        case PredictorKind::kalman:
            state_ = kalman_init(x_init, v_hat);
            break;
    }
}

double Detector::current_eps() const {
    if (config_.test.eps_var > 0.0) return config_.test.eps_var;
    if (var_count_ == 0) return 1e-12;
    const double mean = var_sum_ / static_cast<double>(var_count_);
    return std::max(1e-9 * mean, 1e-12);
}

Decision Detector::step(const FeatureVector& y) {
    if (y.size() == 0) throw std::invalid_argument("Detector::step: empty measurement");
    if (!y.is_finite()) throw std::invalid_argument("Detector::step: non-finite measurement");
    if (std::holds_alternative<std::monostate>(state_)) {
        init_state(y);
    }

    // ---- predict ----
    // Before the first update the smoother states are identically zero: they
    // carry no reference frame (nothing to phase-align against), so no test
    // runs and the step reports a neutral zero statistic, like the moving
    // average does with an empty window.
    std::optional<Prediction> prediction;
    if (auto* ma = std::get_if<MaState>(&state_)) {
        prediction = ma_predict(*ma);
    } else if (auto* ar = std::get_if<ArState>(&state_)) {
        if (ar->y_hat.size() != y.size())
            throw std::invalid_argument("Detector::step: dimension mismatch");
        if (steps_ > 0) prediction = ar_predict(*ar);
    } else if (auto* kf = std::get_if<KalmanState>(&state_)) {
        if (kf->y_hat.size() != y.size())
            throw std::invalid_argument("Detector::step: dimension mismatch");
        kalman_predict(*kf);  // no-op before the first correction
        if (steps_ > 0) prediction = kalman_current_prediction(*kf);
    }

    // ---- test ----
    Decision decision;
    decision.t = y.t;
    const bool warming = steps_ < config_.warmup_steps;
    if (prediction) {
        if (prediction->y_hat.size() != y.size())
            throw std::invalid_argument("Detector::step: dimension mismatch");
        for (double v : prediction->y_cov.variances) var_sum_ += v;
        var_count_ += prediction->y_cov.size();
        const DiagCovariance gamma = gamma_diag(prediction->y_cov, current_eps());
        const double h = config_.test.mode == TestMode::omnidirectional
                             ? h_omni(y.values, prediction->y_hat, gamma, config_.test.align)
                             : h_uni(y.values, prediction->y_hat, gamma, config_.test.align);
        decision = decide(h, config_.test.eta, y.t);
    }
    if (warming) decision.hypothesis = Hypothesis::h0;  // settle before flagging
    last_prediction_ = std::move(prediction);

    // ---- update with the anomaly-dependent weight ----
    const double weight = decision.hypothesis == Hypothesis::h1 ? config_.weights.alpha1
                                                                : config_.weights.alpha0;
    if (auto* ma = std::get_if<MaState>(&state_)) {
        ma_update(*ma, y, weight);
    } else if (auto* ar = std::get_if<ArState>(&state_)) {
        ar_update(*ar, y, weight);
    } else if (auto* kf = std::get_if<KalmanState>(&state_)) {
        kalman_correct(*kf, y, weight, config_.weights.alpha0);
    }

    last_weight_ = weight;
    ++steps_;
    return decision;
}

std::vector<std::pair<std::size_t, std::size_t>> compact_intervals(
    std::span<const Decision> decisions) {
    std::vector<std::pair<std::size_t, std::size_t>> intervals;
    bool open = false;
    for (const Decision& d : decisions) {
        if (d.hypothesis != Hypothesis::h1) {
            open = false;
            continue;
        }
        if (open && intervals.back().second + 1 == d.t) {
            intervals.back().second = d.t;
        } else {
            intervals.emplace_back(d.t, d.t);
            open = true;
        }
    }
    return intervals;
}

Timeline run_stream(const DetectorConfig& config, std::span<const FeatureVector> stream) {
    Detector detector(config);
    Timeline timeline;
    timeline.decisions.reserve(stream.size());
    for (const FeatureVector& y : stream) timeline.decisions.push_back(detector.step(y));
    timeline.intervals = compact_intervals(timeline.decisions);
    return timeline;
}

CalibrationResult calibrate_stream(const DetectorConfig& config,
                                   std::span<const FeatureVector> stream, std::size_t passes,
                                   double p_low, double p_high, double margin_factor) {
    if (passes == 0) throw std::invalid_argument("calibrate_stream: passes must be >= 1");
    if (stream.size() <= config.warmup_steps)
        throw std::invalid_argument("calibrate_stream: stream does not outlast the warmup (" +
                                    std::to_string(stream.size()) + " <= " +
                                    std::to_string(config.warmup_steps) + " steps)");
    CalibrationResult result;
    result.passes = passes;
    double eta = std::numeric_limits<double>::infinity();
    std::vector<double> recorded;
    recorded.reserve(stream.size() - config.warmup_steps);
    for (std::size_t pass = 0; pass < passes; ++pass) {
        DetectorConfig run = config;
        run.test.eta = eta;
        Detector detector(run);
        recorded.clear();
        for (std::size_t i = 0; i < stream.size(); ++i) {
            const Decision d = detector.step(stream[i]);
            if (i >= config.warmup_steps) recorded.push_back(d.statistic);
        }
        eta = std::max(calibrate_threshold(recorded, p_low, p_high, margin_factor), 1e-12);
    }
    result.eta = eta;
    result.sample_low = percentile_linear(recorded, p_low);
    result.sample_high = percentile_linear(recorded, p_high);
    result.recorded = recorded.size();
    return result;
}

Metrics evaluate(std::span<const Decision> decisions,
                 std::span<const std::pair<std::size_t, std::size_t>> labels,
                 std::size_t tpr_grace) {
    for (const auto& [s, e] : labels)
        if (s > e) throw std::invalid_argument("evaluate: label spans must have start <= end");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t j = i + 1; j < labels.size(); ++j) {
            if (labels[i].first <= labels[j].second && labels[j].first <= labels[i].second)
                throw std::invalid_argument("evaluate: label spans must not overlap");
        }
    }

    auto label_of = [&](std::size_t t) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (t >= labels[i].first && t <= labels[i].second) return i;
        return std::nullopt;
    };

    Metrics m;
    m.latencies.assign(labels.size(), std::nullopt);
    std::size_t labeled_hits = 0;
    std::size_t unlabeled_hits = 0;
    for (const Decision& d : decisions) {
        const bool flagged = d.hypothesis == Hypothesis::h1;
        const auto label = label_of(d.t);
        if (label) {
            if (flagged && !m.latencies[*label])
                m.latencies[*label] = d.t - labels[*label].first;
            if (d.t >= labels[*label].first + tpr_grace) {
                ++m.labeled_steps;
                if (flagged) ++labeled_hits;
            }
        } else {
            ++m.unlabeled_steps;
            if (flagged) ++unlabeled_hits;
        }
    }
    m.tpr = m.labeled_steps ? static_cast<double>(labeled_hits) / static_cast<double>(m.labeled_steps) : 0.0;
    m.fpr = m.unlabeled_steps ? static_cast<double>(unlabeled_hits) / static_cast<double>(m.unlabeled_steps) : 0.0;

    double latency_sum = 0.0;
    std::size_t detected = 0;
    for (const auto& lat : m.latencies) {
        if (lat) {
            latency_sum += static_cast<double>(*lat);
            ++detected;
        }
    }
    if (detected) m.mean_latency = latency_sum / static_cast<double>(detected);
    return m;
}

}  // namespace sentinel
