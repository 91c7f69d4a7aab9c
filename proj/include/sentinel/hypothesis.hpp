#pragma once

// Residual-energy hypothesis tests and threshold calibration.
//
// Both statistics compare a measurement y against a prediction y_hat under a
// per-element weighting Gamma formed from the predicted uncertainty:
//   omnidirectional: h = (1/K) sum_k Gamma_k |y_k - y_hat_k|^2   (any deviation)
//   unidirectional:  h = (1/K) Re(e^{-j psi} sum_k sqrt(Gamma_k)(y~_k - y_hat_k))
//                    (signed excess along the prediction's direction)
// With align=true, y~ is y rotated onto y_hat's global phase, which makes the
// statistics insensitive to per-measurement phase offsets.  The unidirectional
// statistic is intended for real nonnegative features (amplitudes, variances);
// there psi = 0 and it reduces to the plain weighted signed difference.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "sentinel/core.hpp"

namespace sentinel {

enum class TestMode { omnidirectional, unidirectional };

enum class GammaMode { diagonal, full };

struct TestConfig {
    TestMode mode = TestMode::omnidirectional;
    bool align = true;
    GammaMode gamma_mode = GammaMode::diagonal;
    // Decision threshold; infinity means "never flag" (calibration runs).
    double eta = std::numeric_limits<double>::infinity();
    // Variance floor used when inverting covariances.  Values <= 0 select the
    // adaptive default: 1e-9 x running mean of predicted variances, floored at
    // 1e-12 absolute.
    double eps_var = 0.0;
};

enum class Hypothesis { h0, h1 };

struct Decision {
    Hypothesis hypothesis = Hypothesis::h0;
    double statistic = 0.0;
    std::size_t t = 0;
};

// Gamma_k = 1 / max(cov_k, eps_var); eps_var must be > 0.
DiagCovariance gamma_diag(const DiagCovariance& cov, double eps_var);

// (C + eps_var I)^-1 for Hermitian PSD C.
HermitianMatrix gamma_full(const HermitianMatrix& cov, double eps_var);

double h_omni(const std::vector<cplx>& y, const std::vector<cplx>& y_hat,
              const DiagCovariance& gamma, bool align);
double h_omni_full(const std::vector<cplx>& y, const std::vector<cplx>& y_hat,
                   const HermitianMatrix& gamma, bool align);
double h_uni(const std::vector<cplx>& y, const std::vector<cplx>& y_hat,
             const DiagCovariance& gamma, bool align);

// H1 iff h > eta, or h is not finite (conservative: broken statistics flag).
Decision decide(double h, double eta, std::size_t t);

// Linear-interpolation percentile at rank p/100 * (n-1), zero based; p in
// (0, 100), samples non-empty.  Does not modify the input.
double percentile_linear(std::span<const double> samples, double p);

// eta = P_high + margin_factor * (P_high - P_low) over recorded statistics.
double calibrate_threshold(std::span<const double> samples,
                           double p_low = 5.0, double p_high = 95.0,
                           double margin_factor = 0.1);

}  // namespace sentinel
