#include "sentinel/predictors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sentinel {

namespace {

void check_weight(double w, const char* who) {
    if (!std::isfinite(w) || w < 0.0 || w > 1.0)
        throw std::invalid_argument(std::string(who) + ": weight outside [0, 1]");
}

void check_measurement(const FeatureVector& y, std::size_t k, const char* who) {
    if (y.size() == 0 || (k != 0 && y.size() != k))
        throw std::invalid_argument(std::string(who) + ": dimension mismatch");
    if (!y.is_finite()) throw std::invalid_argument(std::string(who) + ": non-finite measurement");
}

DiagCovariance residual_variance(const std::vector<cplx>& mean, const DiagCovariance& power) {
    // var = E|y|^2 - |mean|^2, clamped so fp cancellation cannot go negative
    DiagCovariance var;
    var.variances.resize(mean.size());
    for (std::size_t k = 0; k < mean.size(); ++k)
        var.variances[k] = std::max(power.variances[k] - std::norm(mean[k]), 0.0);
    return var;
}

}  // namespace

// ==== moving average =========================================================

MaState ma_init(std::size_t window, double trusted_weight, MaReference ref_policy) {
    if (window == 0) throw std::invalid_argument("ma_init: window must be >= 1");
    check_weight(trusted_weight, "ma_init");
    MaState state;
    state.window = window;
    state.trusted_weight = trusted_weight;
    state.ref_policy = ref_policy;
    return state;
}

void ma_update(MaState& state, const FeatureVector& y, double weight) {
    check_weight(weight, "ma_update");
    check_measurement(y, state.history.empty() ? 0 : state.history.front().values.size(), "ma_update");
    state.history.push_back(MaEntry{y.values, weight});
    if (state.history.size() > state.window) state.history.pop_front();
}

std::optional<std::size_t> ma_reference_index(const MaState& state) {
    if (state.history.empty()) return std::nullopt;
    switch (state.ref_policy) {
        case MaReference::oldest:
            return 0;
        case MaReference::most_recent:
            return state.history.size() - 1;
        case MaReference::most_recent_trusted:
            for (std::size_t i = state.history.size(); i-- > 0;) {
                if (state.history[i].weight == state.trusted_weight) return i;
            }
            return state.history.size() - 1;  // no trusted entry: fall back to newest
    }
    return state.history.size() - 1;
}

std::optional<Prediction> ma_predict(const MaState& state) {
    const auto ref_idx = ma_reference_index(state);
    if (!ref_idx) return std::nullopt;
    const std::vector<cplx>& ref = state.history[*ref_idx].values;
    const std::size_t k = ref.size();

    double wsum = 0.0;
    for (const MaEntry& e : state.history) wsum += e.weight;
    if (wsum < kAlignEpsilon) return std::nullopt;  // every entry flagged at weight 0

    std::vector<cplx> mean(k, cplx{0.0, 0.0});
    DiagCovariance power = DiagCovariance::constant(k, 0.0);
    for (const MaEntry& e : state.history) {
        if (e.weight == 0.0) continue;
        const std::vector<cplx> aligned = phase_align(e.values, ref);
        for (std::size_t i = 0; i < k; ++i) {
            mean[i] += e.weight * aligned[i];
            power.variances[i] += e.weight * std::norm(e.values[i]);
        }
    }
    for (std::size_t i = 0; i < k; ++i) mean[i] /= wsum;
    for (std::size_t i = 0; i < k; ++i) power.variances[i] /= wsum;
    DiagCovariance var = residual_variance(mean, power);
    return Prediction{std::move(mean), std::move(var)};
}

// ==== autoregressive =========================================================

ArState ar_init(std::size_t k, const DiagCovariance& init_corr) {
    if (k == 0 || init_corr.size() != k)
        throw std::invalid_argument("ar_init: dimension mismatch");
    if (!init_corr.is_valid()) throw std::invalid_argument("ar_init: invalid initial correlation");
    ArState state;
    state.y_hat.assign(k, cplx{0.0, 0.0});
    state.corr = init_corr;
    return state;
}

void ar_update(ArState& state, const FeatureVector& y, double weight) {
    check_weight(weight, "ar_update");
    check_measurement(y, state.y_hat.size(), "ar_update");
    const std::vector<cplx> aligned = phase_align(y.values, state.y_hat);
    for (std::size_t k = 0; k < state.y_hat.size(); ++k) {
        state.y_hat[k] = weight * aligned[k] + (1.0 - weight) * state.y_hat[k];
        state.corr.variances[k] =
            weight * std::norm(y.values[k]) + (1.0 - weight) * state.corr.variances[k];
    }
}

Prediction ar_predict(const ArState& state) {
    return Prediction{state.y_hat, residual_variance(state.y_hat, state.corr)};
}

// ==== Kalman =================================================================

KalmanState kalman_init(const DiagCovariance& x_init, const DiagCovariance& v_hat) {
    const std::size_t k = x_init.size();
    if (k == 0 || v_hat.size() != k)
        throw std::invalid_argument("kalman_init: dimension mismatch");
    if (!x_init.is_valid() || !v_hat.is_valid())
        throw std::invalid_argument("kalman_init: invalid covariance");
    KalmanState state;
    state.y_hat.assign(k, cplx{0.0, 0.0});
    state.x_cov = x_init;
    state.corr.variances.resize(k);
    for (std::size_t i = 0; i < k; ++i)
        state.corr.variances[i] = x_init.variances[i] + v_hat.variances[i];
    state.v_hat = v_hat;
    state.u_hat = DiagCovariance::constant(k, 0.0);
    return state;
}

DiagCovariance kalman_gain(const KalmanState& state, double weight, double alpha0) {
    check_weight(weight, "kalman_gain");
    if (!(alpha0 > 0.0)) throw std::invalid_argument("kalman_gain: alpha0 must be > 0");
    const std::size_t k = state.x_cov.size();
    DiagCovariance gain = DiagCovariance::constant(k, 0.0);
    if (weight == 0.0) return gain;  // zero-gain limit
    const double noise_scale = alpha0 / weight;
    for (std::size_t i = 0; i < k; ++i) {
        const double denom = state.x_cov.variances[i] + noise_scale * state.v_hat.variances[i];
        gain.variances[i] = denom > 0.0 ? state.x_cov.variances[i] / denom : 0.0;
    }
    return gain;
}

void kalman_correct(KalmanState& state, const FeatureVector& y, double weight, double alpha0) {
    check_measurement(y, state.y_hat.size(), "kalman_correct");
    if (weight == 0.0) return;  // fully distrusted measurement: keep the state
    const DiagCovariance gain = kalman_gain(state, weight, alpha0);
    const std::vector<cplx> aligned = phase_align(y.values, state.y_hat);
    for (std::size_t k = 0; k < state.y_hat.size(); ++k) {
        const double g = gain.variances[k];
        state.y_hat[k] += g * (aligned[k] - state.y_hat[k]);
        state.corr.variances[k] += g * (std::norm(y.values[k]) - state.corr.variances[k]);
        state.x_cov.variances[k] *= 1.0 - g;
    }
    state.a_hat = 1.0 - weight;
    state.corrected = true;
}

void kalman_predict(KalmanState& state) {
    if (!state.corrected) return;  // initial state already predicts the first step
    const double a2 = state.a_hat * state.a_hat;
    for (std::size_t k = 0; k < state.y_hat.size(); ++k) {
        const double u = (1.0 - a2) * state.corr.variances[k];  // process-noise estimate
        state.u_hat.variances[k] = u;
        state.y_hat[k] *= state.a_hat;
        state.x_cov.variances[k] = a2 * state.x_cov.variances[k] + u;
        state.corr.variances[k] =
            a2 * state.corr.variances[k] + (1.0 - a2) * state.v_hat.variances[k] + u;
    }
}

Prediction kalman_current_prediction(const KalmanState& state) {
    return Prediction{state.y_hat, residual_variance(state.y_hat, state.corr)};
}

}  // namespace sentinel
