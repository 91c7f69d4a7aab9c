#pragma once

// One-step-ahead predictors for complex feature streams under phase noise.
// All three share the same contract: update(state, y, weight) folds in a new
// measurement with an anomaly-dependent weight, predict(state) yields the
// prediction (y_hat) and its per-element uncertainty for the next step.
// Measurements are phase-aligned to the state before use, so predictions are
// equivariant under per-measurement phase offsets: only the state's own
// (arbitrary, unobservable) global phase is retained.

#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

#include "sentinel/core.hpp"

namespace sentinel {

// Update weights fed back from the detector: alpha0 for measurements judged
// normal, alpha1 (much smaller) for flagged ones, so anomalies barely
// contaminate the learned baseline.
struct WeightPolicy {
    double alpha0 = 0.02;
    double alpha1 = 0.001;

    bool is_valid() const noexcept {
        return alpha0 > 0.0 && alpha0 <= 1.0 && alpha1 >= 0.0 && alpha1 <= alpha0;
    }
};

struct Prediction {
    std::vector<cplx> y_hat;
    DiagCovariance y_cov;  // per-element residual variance estimate, >= 0
};

// ==== moving average =========================================================

// Which buffered entry supplies the phase reference frame for the window.
enum class MaReference {
    most_recent_trusted,  // newest entry stored with the "normal" weight (default)
    most_recent,          // newest entry regardless of weight
    oldest,               // oldest entry in the window
};

struct MaEntry {
    std::vector<cplx> values;
    double weight = 0.0;
};

struct MaState {
    std::deque<MaEntry> history;  // newest at the back, size <= window
    std::size_t window = 200;
    MaReference ref_policy = MaReference::most_recent_trusted;
    double trusted_weight = 0.02;  // weight value counted as "normal" by the ref policy
};

MaState ma_init(std::size_t window, double trusted_weight,
                MaReference ref_policy = MaReference::most_recent_trusted);
// Appends (y, weight), evicting the oldest entry when the window is full.
// Zero-weight measurements still occupy a slot.
void ma_update(MaState& state, const FeatureVector& y, double weight);
// Weight-normalized mean of the window after aligning every entry to the
// reference entry's frame; variance is the weighted E|y|^2 minus |y_hat|^2.
// Empty window -> nullopt.
std::optional<Prediction> ma_predict(const MaState& state);
// Index into state.history of the current reference entry (empty -> nullopt).
std::optional<std::size_t> ma_reference_index(const MaState& state);

// ==== autoregressive (exponential smoothing) =================================

struct ArState {
    std::vector<cplx> y_hat;   // running aligned mean; zero until first update
    DiagCovariance corr;       // running E|y|^2 per element
};

ArState ar_init(std::size_t k, const DiagCovariance& init_corr);
// y_hat <- w * align(y, y_hat) + (1-w) * y_hat;  corr <- w |y|^2 + (1-w) corr.
void ar_update(ArState& state, const FeatureVector& y, double weight);
// Prediction is the state itself; variance = max(corr - |y_hat|^2, 0).
Prediction ar_predict(const ArState& state);

// ==== Kalman filter with online noise estimation =============================

// Scalar-per-element Kalman filter over a stationary AR(1) state model whose
// transition a_hat, process noise u_hat, and measurement noise are estimated
// online from the weighted measurement stream.
struct KalmanState {
    std::vector<cplx> y_hat;  // state estimate (doubles as the prediction)
    DiagCovariance x_cov;     // estimation-error variance
    DiagCovariance corr;      // running E|y|^2 per element
    DiagCovariance v_hat;     // measurement-noise variance (fixed)
    DiagCovariance u_hat;     // last process-noise estimate (diagnostic)
    double a_hat = 1.0;       // transition estimate, 1 - last update weight
    bool corrected = false;   // propagation starts only after the first correction
};

// x_init: initial estimation-error variance (typical: sample power of the
// first measurement); v_hat: measurement-noise variance.
KalmanState kalman_init(const DiagCovariance& x_init, const DiagCovariance& v_hat);
// Measurement update at weight w: gain K = x_cov / (x_cov + (alpha0/w) v_hat),
// aligned innovation correction, corr <- corr + K (|y|^2 - corr), then
// a_hat <- 1 - w.  w == 0 leaves the state untouched (zero-gain limit).
void kalman_correct(KalmanState& state, const FeatureVector& y, double weight, double alpha0);
// Time update: u_hat = (1 - a_hat^2) corr, then y_hat <- a_hat y_hat,
// x_cov <- a_hat^2 x_cov + u_hat, corr <- a_hat^2 corr + (1-a_hat^2) v_hat + u_hat.
// No-op before the first correction (the initial state predicts step 0).
void kalman_predict(KalmanState& state);
// Prediction view of the current state: (y_hat, max(corr - |y_hat|^2, 0)).
Prediction kalman_current_prediction(const KalmanState& state);
// Measurement-update gain that kalman_correct would apply right now.
DiagCovariance kalman_gain(const KalmanState& state, double weight, double alpha0);

}  // namespace sentinel
