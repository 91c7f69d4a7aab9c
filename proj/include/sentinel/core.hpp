#pragma once

// Core value types shared by the whole pipeline: complex feature vectors,
// diagonal and full Hermitian uncertainty descriptions, and phase alignment.

#include <complex>
#include <cstddef>
#include <vector>

namespace sentinel {

using cplx = std::complex<double>;

// Inner products with magnitude below this are treated as "no usable phase
// reference": alignment passes the input through unchanged.  A stream whose
// initial prediction is zero therefore keeps the global phase of its first
// measurement.
inline constexpr double kAlignEpsilon = 1e-12;

// A complex measurement (or prediction) of K features plus its position in
// the stream.  t is the bundle-window index for trace-derived streams.
struct FeatureVector {
    std::vector<cplx> values;
    std::size_t t = 0;

    std::size_t size() const noexcept { return values.size(); }
    bool is_finite() const noexcept;
};

// Per-element variances of a K-dimensional quantity.  Entries are >= 0.
struct DiagCovariance {
    std::vector<double> variances;

    DiagCovariance() = default;
    explicit DiagCovariance(std::vector<double> v) : variances(std::move(v)) {}
    static DiagCovariance constant(std::size_t k, double value);

    std::size_t size() const noexcept { return variances.size(); }
    bool is_valid() const noexcept;  // all entries finite and >= 0
};

// Dense K x K Hermitian matrix, row major.  Only the full-matrix test
// weighting uses this; the streaming path is diagonal throughout.
class HermitianMatrix {
public:
    static constexpr std::size_t kMaxDim = 64;

    HermitianMatrix() = default;
    explicit HermitianMatrix(std::size_t k);  // zero matrix
    static HermitianMatrix identity(std::size_t k);

    std::size_t dim() const noexcept { return dim_; }
    cplx& at(std::size_t i, std::size_t j);
    const cplx& at(std::size_t i, std::size_t j) const;

    bool is_hermitian(double tol = 1e-9) const noexcept;
    // Smallest eigenvalue >= -tol * max(1, |trace|); requires is_hermitian().
    bool is_positive_semidefinite(double tol = 1e-9) const;
    // (A + ridge I)^-1 for Hermitian A; throws std::invalid_argument when the
    // ridged matrix is singular to working precision.
    HermitianMatrix regularized_inverse(double ridge) const;

    // y^H A x
    cplx quadratic_form(const std::vector<cplx>& y, const std::vector<cplx>& x) const;

private:
    std::size_t dim_ = 0;
    std::vector<cplx> entries_;
};

// sum_k conj(y_k) * r_k
cplx hermitian_dot(const std::vector<cplx>& y, const std::vector<cplx>& r);

// Rotates y by the unit factor (y^H r)/|y^H r| so that it points "towards" r
// in the global-phase sense; |y^H r| < kAlignEpsilon returns y unchanged.
// Magnitudes are preserved exactly; align(e^{j phi} y, r) is identical for
// every phi (the factor absorbs the input's global phase).
std::vector<cplx> phase_align(const std::vector<cplx>& y, const std::vector<cplx>& r);
FeatureVector phase_align(const FeatureVector& y, const FeatureVector& r);

}  // namespace sentinel
