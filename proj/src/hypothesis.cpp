#include "sentinel/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sentinel {

DiagCovariance gamma_diag(const DiagCovariance& cov, double eps_var) {
    if (!(eps_var > 0.0) || !std::isfinite(eps_var))
        throw std::invalid_argument("gamma_diag: eps_var must be finite and > 0");
    if (!cov.is_valid()) throw std::invalid_argument("gamma_diag: invalid covariance");
    DiagCovariance gamma;
    gamma.variances.reserve(cov.size());
    for (double v : cov.variances) gamma.variances.push_back(1.0 / std::max(v, eps_var));
    return gamma;
}

HermitianMatrix gamma_full(const HermitianMatrix& cov, double eps_var) {
    if (!(eps_var > 0.0) || !std::isfinite(eps_var))
        throw std::invalid_argument("gamma_full: eps_var must be finite and > 0");
    if (!cov.is_positive_semidefinite())
        throw std::invalid_argument("gamma_full: covariance not positive semidefinite");
    return cov.regularized_inverse(eps_var);
}

namespace {

void check_dims(std::size_t ky, std::size_t kh, std::size_t kg, const char* who) {
    if (ky == 0 || ky != kh || ky != kg) throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}

}  // namespace

double h_omni(const std::vector<cplx>& y, const std::vector<cplx>& y_hat,
              const DiagCovariance& gamma, bool align) {
    check_dims(y.size(), y_hat.size(), gamma.size(), "h_omni");
    const std::size_t k = y.size();
    double acc = 0.0;
    if (!align) {
        for (std::size_t i = 0; i < k; ++i) acc += gamma.variances[i] * std::norm(y[i] - y_hat[i]);
    } else {
        // Expanded aligned form: y^H G y - 2 |y^H G y_hat| + y_hat^H G y_hat.
        // Identical to sum G |align(y,y_hat) - y_hat|^2 but cheaper and exact
        // under global phase rotations of either argument.
        double yy = 0.0, hh = 0.0;
        cplx cross{0.0, 0.0};
        for (std::size_t i = 0; i < k; ++i) {
            yy += gamma.variances[i] * std::norm(y[i]);
            hh += gamma.variances[i] * std::norm(y_hat[i]);
            cross += gamma.variances[i] * std::conj(y[i]) * y_hat[i];
        }
        acc = yy - 2.0 * std::abs(cross) + hh;
        acc = std::max(acc, 0.0);  // guard fp cancellation
    }
    return acc / static_cast<double>(k);
}

double h_omni_full(const std::vector<cplx>& y, const std::vector<cplx>& y_hat,
                   const HermitianMatrix& gamma, bool align) {
    check_dims(y.size(), y_hat.size(), gamma.dim(), "h_omni_full");
    const std::size_t k = y.size();
    double acc;
    if (!align) {
        std::vector<cplx> d(k);
        for (std::size_t i = 0; i < k; ++i) d[i] = y[i] - y_hat[i];
        acc = gamma.quadratic_form(d, d).real();
    } else {
        const double yy = gamma.quadratic_form(y, y).real();
        const double hh = gamma.quadratic_form(y_hat, y_hat).real();
        const double cross = std::abs(gamma.quadratic_form(y, y_hat));
        acc = std::max(yy - 2.0 * cross + hh, 0.0);
    }
    return acc / static_cast<double>(k);
}

double h_uni(const std::vector<cplx>& y, const std::vector<cplx>& y_hat,
             const DiagCovariance& gamma, bool align) {
    check_dims(y.size(), y_hat.size(), gamma.size(), "h_uni");
    const std::size_t k = y.size();
    const std::vector<cplx>& yt = align ? phase_align(y, y_hat) : y;
    cplx residual{0.0, 0.0};
    cplx reference{0.0, 0.0};
    for (std::size_t i = 0; i < k; ++i) {
        const double w = std::sqrt(gamma.variances[i]);
        residual += w * (yt[i] - y_hat[i]);
        reference += w * y_hat[i];
    }
    if (align && std::abs(reference) >= kAlignEpsilon) {
        // Project onto the prediction's common phase so the statistic is
        // invariant under a joint rotation of measurement and prediction.
        residual *= std::conj(reference) / std::abs(reference);
    }
    return residual.real() / static_cast<double>(k);
}

Decision decide(double h, double eta, std::size_t t) {
    const bool flag = !std::isfinite(h) || h > eta;
    return Decision{flag ? Hypothesis::h1 : Hypothesis::h0, h, t};
}

double percentile_linear(std::span<const double> samples, double p) {
    if (samples.empty()) throw std::invalid_argument("percentile_linear: empty sample set");
    if (!(p > 0.0) || !(p < 100.0)) throw std::invalid_argument("percentile_linear: p outside (0, 100)");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(rank);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double calibrate_threshold(std::span<const double> samples,
                           double p_low, double p_high, double margin_factor) {
    if (!(p_low < p_high)) throw std::invalid_argument("calibrate_threshold: p_low must be < p_high");
    const double lo = percentile_linear(samples, p_low);
    const double hi = percentile_linear(samples, p_high);
    return hi + margin_factor * (hi - lo);
}

}  // namespace sentinel
